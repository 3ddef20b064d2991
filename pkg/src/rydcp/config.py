"""YAML stack and scan files.

Both formats are versioned with a top-level ``schema_version``. Errors carry
the file name, the line of the offending entry and its dotted field path.
"""

from __future__ import annotations

import dataclasses
import math
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .em import Layer, LayerStack
from .materials import Dielectric, DrudeMetal, GrapheneParams, KuboGraphene, NonlocalGraphene

__all__ = [
    "AXES",
    "ConfigError",
    "Grid",
    "ScanConfig",
    "StackSpec",
    "load_scan_config",
    "load_stack",
    "material_presets",
    "parse_length",
    "parse_scan_config",
    "parse_stack",
    "stack_path",
    "with_fermi_energy",
    "with_model",
]

SCHEMA_VERSION = 1
AXES = ("z0", "temperature", "n", "fermi_energy", "spacing")
MODELS = ("kubo", "nonlocal")
_LENGTH_UNITS = {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "μm": 1e-6, "nm": 1e-9}
_LENGTH_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*([a-zµμ]*)\s*$")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<config>", path: str = ""):
        self.line = line
        self.source = source
        self.path = path
        where = source if line is None else f"{source}:{line}"
        super().__init__(f"{where}: {path + ': ' if path else ''}{message}")


class _Map(dict):
    """Mapping that remembers where it and each of its keys appeared."""

    line: int | None = None
    key_lines: dict


class _Seq(list):
    line: int | None = None


class _Loader(yaml.SafeLoader):
    pass


def _construct_map(loader, node):
    loader.flatten_mapping(node)
    out = _Map()
    out.line = node.start_mark.line + 1
    out.key_lines = {}
    for knode, vnode in node.value:
        key = loader.construct_object(knode, deep=True)
        out[key] = loader.construct_object(vnode, deep=True)
        out.key_lines[key] = knode.start_mark.line + 1
    return out


def _construct_seq(loader, node):
    out = _Seq(loader.construct_object(v, deep=True) for v in node.value)
    out.line = node.start_mark.line + 1
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_map)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _construct_seq)


def _load_yaml(text: str, source: str):
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        raise ConfigError(f"YAML syntax error: {exc.problem}", mark.line + 1 if mark else None, source) from None
    if not isinstance(data, _Map):
        raise ConfigError("top level must be a mapping", 1, source)
    return data


class _Ctx:
    """Error helper bound to one source file."""

    def __init__(self, source: str):
        self.source = source

    def fail(self, msg, node=None, path="", key=None):
        line = None
        if isinstance(node, _Map) and key is not None:
            line = node.key_lines.get(key, node.line)
        elif node is not None:
            line = getattr(node, "line", None)
        raise ConfigError(msg, line, self.source, path)

    def check_version(self, data):
        v = data.get("schema_version")
        if v != SCHEMA_VERSION:
            self.fail(f"unsupported schema_version {v!r} (expected {SCHEMA_VERSION})", data, "schema_version", "schema_version")


def _number(v) -> float:
    """A float from a YAML scalar; PyYAML reads '4.0e12' as a string."""
    if isinstance(v, bool):
        raise ValueError(f"expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            pass
    raise ValueError(f"expected a number, got {v!r}")


def parse_length(value) -> float:
    """Metres from a number or a string such as ``"10 nm"``; ``"inf"`` allowed."""
    if isinstance(value, bool):
        raise ValueError(f"not a length: {value!r}")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        if value.strip().lower() in ("inf", "infinite"):
            return math.inf
        m = _LENGTH_RE.match(value)
        if not m or m.group(2) not in _LENGTH_UNITS and m.group(2) != "":
            raise ValueError(f"not a length: {value!r} (use e.g. '10 nm', '1 um', 2e-6)")
        try:
            out = float(m.group(1)) * _LENGTH_UNITS.get(m.group(2), 1.0)
        except ValueError:
            raise ValueError(f"not a length: {value!r}") from None
    else:
        raise ValueError(f"not a length: {value!r}")
    if not out > 0:
        raise ValueError(f"length must be positive, got {value!r}")
    return out


def _data_file(name: str):
    override = os.environ.get("RYDCP_DATA_DIR")
    if override and (Path(override) / name).exists():
        return Path(override) / name
    return resources.files("rydcp") / "data" / name


def material_presets() -> dict:
    """Named materials from the bundled presets file."""
    src = _data_file("materials.yaml")
    data = _load_yaml(src.read_text(encoding="utf-8"), str(src))
    _Ctx(str(src)).check_version(data)
    return {k: dict(v) for k, v in data["materials"].items()}


def stack_path(name: str):
    """Resolve a canonical stack name to its bundled file."""
    return _data_file(f"stacks/{name}.yaml")


_MATERIAL_FIELDS = {
    "dielectric": {"eps_r"},
    "drude": {"omega_p", "gamma_d"},
    "kubo": {"fermi_energy", "gamma", "fermi_velocity", "temperature"},
    "nonlocal": {"fermi_energy", "gamma", "fermi_velocity", "temperature"},
}


def _material(entry, ctx: _Ctx, path: str, presets: dict, want_sheet: bool):
    if not isinstance(entry, _Map):
        ctx.fail("entry must be a mapping", entry, path)
    name = entry.get("material")
    if name is not None and name not in presets:
        ctx.fail(f"unknown material {name!r}; known: {', '.join(sorted(presets))}", entry, f"{path}.material", "material")
    spec = dict(presets.get(name, {}))
    skip = {"material", "thickness", "interface", "mu"}
    spec.update({k: v for k, v in entry.items() if k not in skip})
    kind = spec.pop("kind", None)
    if kind not in _MATERIAL_FIELDS:
        ctx.fail(f"material kind must be one of {sorted(_MATERIAL_FIELDS)}", entry, f"{path}.kind", "kind")
    is_sheet = kind in ("kubo", "nonlocal")
    if is_sheet != want_sheet:
        what = "a sheet (graphene)" if is_sheet else "a bulk material"
        ctx.fail(f"{name or kind} is {what} and cannot be used here", entry, f"{path}.material", "material")
    unknown = set(spec) - _MATERIAL_FIELDS[kind]
    if unknown:
        k = sorted(unknown)[0]
        ctx.fail(f"unknown field for {kind} material", entry, f"{path}.{k}", k)
    for k, v in spec.items():
        if k == "temperature" and v is None:
            continue
        try:
            spec[k] = _number(v)
        except ValueError as exc:
            ctx.fail(str(exc), entry, f"{path}.{k}", k)
    try:
        if kind == "dielectric":
            return Dielectric(**spec)
        if kind == "drude":
            return DrudeMetal(**spec)
        params = GrapheneParams(**spec)
    except (TypeError, ValueError) as exc:
        ctx.fail(str(exc), entry, path)
    return KuboGraphene(params) if kind == "kubo" else NonlocalGraphene(params)


@dataclass(frozen=True)
class StackSpec:
    """A parsed stack together with its provenance."""

    stack: LayerStack
    source: str
    spacer_index: int | None = None  # the single finite inner layer, if unique

    def with_spacing(self, d: float) -> LayerStack:
        if self.spacer_index is None:
            raise ValueError(f"{self.source}: stack has no unique finite spacer layer to vary")
        layers = list(self.stack.layers)
        old = layers[self.spacer_index]
        layers[self.spacer_index] = Layer(old.material, d, old.mu)
        return LayerStack(tuple(layers), self.stack.sheets, self.stack.name)



def _map_sheets(stack: LayerStack, fn) -> LayerStack:
    sheets = tuple(None if s is None else fn(s) for s in stack.sheets)
    return LayerStack(stack.layers, sheets, stack.name)


def with_fermi_energy(stack: LayerStack, ef: float) -> LayerStack:
    """Same stack with every graphene sheet set to Fermi energy ``ef`` (eV)."""
    return _map_sheets(stack, lambda s: type(s)(dataclasses.replace(s.params, fermi_energy=ef)))


def with_model(stack: LayerStack, model: str) -> LayerStack:
    """Same stack with every graphene sheet switched to the given conductivity model."""
    cls = {"kubo": KuboGraphene, "nonlocal": NonlocalGraphene}[model]
    return _map_sheets(stack, lambda s: cls(s.params))


def parse_stack(data, source: str = "<stack>") -> StackSpec:
    """Build a stack from an already-loaded YAML mapping."""
    ctx = _Ctx(source)
    ctx.check_version(data)
    presets = material_presets()
    layers_raw = data.get("layers")
    if not isinstance(layers_raw, list) or len(layers_raw) < 2:
        ctx.fail("need a list of at least two layers", data, "layers", "layers")
    layers = []
    last = len(layers_raw) - 1
    for i, entry in enumerate(layers_raw):
        path = f"layers[{i}]"
        mat = _material(entry, ctx, path, presets, want_sheet=False)
        if "thickness" in entry:
            try:
                t = parse_length(entry["thickness"])
            except ValueError as exc:
                ctx.fail(str(exc), entry, f"{path}.thickness", "thickness")
        elif 0 < i < last:
            ctx.fail("inner layers need a thickness", entry, f"{path}.thickness")
        else:
            t = math.inf
        if (i in (0, last)) != math.isinf(t):
            ctx.fail("only the first and last layers are semi-infinite", entry, f"{path}.thickness", "thickness")
        mu = entry.get("mu", 1.0)
        if isinstance(mu, bool) or not isinstance(mu, (int, float)) or mu <= 0:
            ctx.fail(f"mu must be a positive number, got {mu!r}", entry, f"{path}.mu", "mu")
        layers.append(Layer(mat, t, float(mu)))
    sheets = [None] * (len(layers) - 1)
    sheets_raw = data.get("sheets", []) or []
    if not isinstance(sheets_raw, list):
        ctx.fail("sheets must be a list", data, "sheets", "sheets")
    for i, entry in enumerate(sheets_raw):
        path = f"sheets[{i}]"
        if not isinstance(entry, _Map):
            ctx.fail("entry must be a mapping", entry, path)
        idx = entry.get("interface")
        if isinstance(idx, bool) or not isinstance(idx, int) or not 0 <= idx < len(sheets):
            ctx.fail(f"interface must be an integer in [0, {len(sheets) - 1}]", entry, f"{path}.interface", "interface")
        if sheets[idx] is not None:
            ctx.fail(f"interface {idx} already has a sheet", entry, f"{path}.interface", "interface")
        sheets[idx] = _material(entry, ctx, path, presets, want_sheet=True)
    try:
        stack = LayerStack(tuple(layers), tuple(sheets), str(data.get("name", "")))
    except ValueError as exc:
        ctx.fail(str(exc), data, "layers", "layers")
    inner = [i for i, l in enumerate(layers) if math.isfinite(l.thickness)]
    return StackSpec(stack, source, inner[0] if len(inner) == 1 else None)


def load_stack(ref) -> StackSpec:
    """Load a stack from a file path or a canonical stack name."""
    p = Path(ref)
    if not p.exists():
        cand = stack_path(str(ref))
        if not cand.is_file():
            raise ConfigError(f"no stack file or canonical stack named {ref!r}", source=str(ref))
        text, source = cand.read_text(encoding="utf-8"), str(ref)
    else:
        text, source = p.read_text(encoding="utf-8"), str(p)
    return parse_stack(_load_yaml(text, source), source)


@dataclass(frozen=True)
class Grid:
    name: str
    values: tuple

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class ScanConfig:
    """A validated scan: one or two axes, the fixed coordinates and outputs."""

    stack: StackSpec
    axes: tuple  # of Grid, outer axis first
    fixed: dict
    model: str | None = None
    tolerances: dict = field(default_factory=lambda: {"matsubara": 1e-8, "green_rtol": 1e-9})
    output: str | None = None
    plot: bool = True
    name: str = ""

    def points(self):
        """Grid points as dicts, outer axis slowest."""
        if len(self.axes) == 1:
            combos = [(v,) for v in self.axes[0].values]
        else:
            combos = [(a, b) for a in self.axes[0].values for b in self.axes[1].values]
        for c in combos:
            p = dict(self.fixed)
            p.update({g.name: v for g, v in zip(self.axes, c)})
            yield p


def _coerce(name, v):
    if name in ("z0", "spacing"):
        return parse_length(v)
    if name == "n":
        if isinstance(v, bool) or not isinstance(v, int) and not (isinstance(v, float) and v.is_integer()):
            raise ValueError(f"n must be an integer, got {v!r}")
        return int(v)
    v = _number(v)
    if name == "temperature" and v < 0:
        raise ValueError("temperature must be non-negative")
    return v


def _grid(name, spec, ctx: _Ctx, node, path) -> Grid:
    if isinstance(spec, list):
        try:
            vals = [_coerce(name, v) for v in spec]
        except ValueError as exc:
            ctx.fail(str(exc), spec, path)
    elif isinstance(spec, _Map):
        unknown = set(spec) - {"start", "stop", "num", "spacing"}
        if unknown:
            k = sorted(unknown)[0]
            ctx.fail("unknown grid field", spec, f"{path}.{k}", k)
        for k in ("start", "stop", "num"):
            if k not in spec:
                ctx.fail(f"grid needs '{k}'", spec, f"{path}.{k}")
        num = spec["num"]
        if isinstance(num, bool) or not isinstance(num, int) or num < 0:
            ctx.fail("num must be a non-negative integer", spec, f"{path}.num", "num")
        try:
            a, b = _coerce(name, spec["start"]), _coerce(name, spec["stop"])
        except ValueError as exc:
            ctx.fail(str(exc), spec, f"{path}.start")
        spacing = spec.get("spacing", "linear")
        if spacing == "linear":
            vals = np.linspace(a, b, num)
        elif spacing == "log":
            if a <= 0 or b <= 0:
                ctx.fail("log spacing needs positive bounds", spec, f"{path}.spacing", "spacing")
            vals = np.geomspace(a, b, num)
        else:
            ctx.fail("spacing must be 'linear' or 'log'", spec, f"{path}.spacing", "spacing")
        if name == "n":
            vals = [int(round(v)) for v in vals]
        else:
            vals = [float(v) for v in vals]
    else:
        ctx.fail("grid must be a list of values or a {start, stop, num} mapping", node, path, name)
    if not vals:
        ctx.fail("grid is empty", node, path, name)
    d = np.diff(np.asarray(vals, dtype=float))
    if len(vals) > 1 and not (np.all(d > 0) or np.all(d < 0)):
        ctx.fail("grid must be strictly monotone", node, path, name)
    return Grid(name, tuple(vals))


def parse_scan_config(data, source: str = "<scan>", base_dir: Path | None = None) -> ScanConfig:
    ctx = _Ctx(source)
    ctx.check_version(data)
    known = {"schema_version", "name", "stack", "model", "atom", "axes", "fixed", "tolerances", "output"}
    for k in data:
        if k not in known:
            ctx.fail("unknown top-level key", data, str(k), k)
    stack_ref = data.get("stack", "suspended-graphene")
    if isinstance(stack_ref, _Map):
        spec = parse_stack(stack_ref, f"{source} (stack)")
    elif isinstance(stack_ref, str):
        ref = stack_ref
        if base_dir is not None and (base_dir / ref).exists():
            ref = str(base_dir / ref)
        try:
            spec = load_stack(ref)
        except ConfigError as exc:
            if exc.line is None:
                ctx.fail(str(exc), data, "stack", "stack")
            raise
    else:
        ctx.fail("stack must be a file name, canonical name or inline mapping", data, "stack", "stack")
    model = data.get("model")
    if model is not None and model not in MODELS:
        ctx.fail(f"model must be one of {MODELS}", data, "model", "model")

    atom = data.get("atom", _Map())
    fixed = {}
    if isinstance(atom, _Map):
        if atom.get("series", "S") != "S":
            ctx.fail("only nS1/2 target states are supported", atom, "atom.series", "series")
        if "n" in atom:
            n = atom["n"]
            fixed["n"] = n
    else:
        ctx.fail("atom must be a mapping", data, "atom", "atom")

    axes_raw = data.get("axes")
    if not isinstance(axes_raw, _Map) or not axes_raw:
        ctx.fail("axes must map one or two of " + ", ".join(AXES) + " to grids", data, "axes", "axes")
    axes = []
    for name, spec_ in axes_raw.items():
        if name not in AXES:
            ctx.fail(f"unknown axis; use one of {AXES}", axes_raw, f"axes.{name}", name)
        axes.append(_grid(name, spec_, ctx, axes_raw, f"axes.{name}"))
    if len(axes) > 2:
        ctx.fail("at most two scan axes", axes_raw, "axes")

    fixed_raw = data.get("fixed", _Map()) or _Map()
    if not isinstance(fixed_raw, _Map):
        ctx.fail("fixed must be a mapping", data, "fixed", "fixed")
    for k, v in fixed_raw.items():
        if k not in AXES:
            ctx.fail(f"unknown coordinate; use one of {AXES}", fixed_raw, f"fixed.{k}", k)
        fixed[k] = v
    clean = {}
    for k, v in fixed.items():
        if any(g.name == k for g in axes):
            continue
        if isinstance(v, list):
            ctx.fail("fixed coordinates take a single value; move lists to axes", fixed_raw, f"fixed.{k}", k)
        try:
            clean[k] = _coerce(k, v)
        except ValueError as exc:
            ctx.fail(str(exc), fixed_raw if k in fixed_raw else atom, f"fixed.{k}", k)
    names = {g.name for g in axes} | set(clean)
    for req in ("n", "z0", "temperature"):
        if req not in names:
            ctx.fail(f"'{req}' must be set as an axis or a fixed coordinate", data, req)
    if "spacing" in names and spec.spacer_index is None:
        ctx.fail("spacing needs a stack with exactly one finite inner layer", data, "stack", "stack")
    if "fermi_energy" in names and not any(s is not None for s in spec.stack.sheets):
        ctx.fail("fermi_energy needs a stack with a graphene sheet", data, "stack", "stack")

    tol = {"matsubara": 1e-8, "green_rtol": 1e-9}
    tol_raw = data.get("tolerances", _Map()) or _Map()
    for k, v in tol_raw.items():
        if k not in tol:
            ctx.fail(f"unknown tolerance; use one of {sorted(tol)}", tol_raw, f"tolerances.{k}", k)
        try:
            v = _number(v)
        except ValueError:
            v = -1.0
        if not 0 < v < 1:
            ctx.fail("tolerance must be a number in (0, 1)", tol_raw, f"tolerances.{k}", k)
        tol[k] = v

    out = data.get("output", _Map()) or _Map()
    if not isinstance(out, _Map):
        ctx.fail("output must be a mapping", data, "output", "output")
    csv_path = out.get("csv")
    if csv_path is not None and base_dir is not None and not Path(csv_path).is_absolute():
        csv_path = str(base_dir / csv_path)
    return ScanConfig(
        stack=spec,
        axes=tuple(axes),
        fixed=clean,
        model=model,
        tolerances=tol,
        output=csv_path,
        plot=bool(out.get("plot", True)),
        name=str(data.get("name", "")),
    )


def load_scan_config(path) -> ScanConfig:
    p = Path(path)
    return parse_scan_config(_load_yaml(p.read_text(encoding="utf-8"), str(p)), str(p), p.parent)
