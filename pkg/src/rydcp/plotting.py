"""Plot scripts written next to result tables.

Each table gets a standalone script (stdlib csv plus matplotlib) that
redraws it. The same script is then executed once with the Agg backend to
leave a PNG beside the CSV, so the script is exercised on every run.
"""

from __future__ import annotations

import pprint
import runpy
from dataclasses import asdict, dataclass, field
from pathlib import Path

__all__ = ["PlotSpec", "emit_plot", "render", "write_plot_script"]


@dataclass(frozen=True)
class PlotSpec:
    x: str
    y: tuple
    group: str | None = None  # one curve per distinct value of this column
    kind: str = "line"  # line | bar | image
    xlabel: str = ""
    ylabel: str = ""
    title: str = ""
    logx: bool = False
    yscale: str = "auto"  # auto | linear | log | symlog
    scale_y: float = 1.0
    extra: dict = field(default_factory=dict)


_TEMPLATE = '''\
#!/usr/bin/env python3
"""Redraw {csv_name}. Usage: python {script_name} [output.png]"""
import csv
import sys
from pathlib import Path

import matplotlib

if __name__ == "__main__":
    matplotlib.use("Agg")
import matplotlib.pyplot as plt

SPEC = {spec}
HERE = Path(__file__).resolve().parent
TABLE = HERE / {csv_name!r}


def _num(s):
    try:
        return float(s)
    except (TypeError, ValueError):
        return float("nan")


def load():
    with open(TABLE, newline="") as fh:
        return [r for r in csv.DictReader(fh) if not r.get("error")]


def draw(rows, ax):
    spec = SPEC
    if spec["kind"] == "image":
        xs = sorted({{_num(r[spec["x"]]) for r in rows}})
        gs = sorted({{_num(r[spec["group"]]) for r in rows}})
        grid = [[float("nan")] * len(xs) for _ in gs]
        for r in rows:
            grid[gs.index(_num(r[spec["group"]]))][xs.index(_num(r[spec["x"]]))] = _num(r[spec["y"][0]]) * spec["scale_y"]
        mesh = ax.pcolormesh(xs, gs, grid, shading="nearest", cmap="viridis")
        ax.figure.colorbar(mesh, ax=ax, label=spec["ylabel"])
        ax.set_ylabel(spec["extra"].get("group_label", spec["group"]))
    else:
        groups = {{}}
        for r in rows:
            groups.setdefault(r[spec["group"]] if spec["group"] else "", []).append(r)
        values = []
        for gname, grows in groups.items():
            x = [_num(r[spec["x"]]) if spec["kind"] != "bar" else r[spec["x"]] for r in grows]
            for col in spec["y"]:
                y = [_num(r[col]) * spec["scale_y"] for r in grows]
                values += y
                label = " ".join(p for p in (col if len(spec["y"]) > 1 else "", str(gname)) if p)
                if spec["kind"] == "bar":
                    ax.bar(x, y, label=label or None, alpha=0.7)
                else:
                    ax.plot(x, y, marker=".", label=label or None)
        scale = spec["yscale"]
        if scale == "auto":
            finite = [v for v in values if v == v]
            pos = all(v > 0 for v in finite)
            neg = all(v < 0 for v in finite)
            scale = "linear" if spec["kind"] == "bar" else ("symlog" if not (pos or neg) else "linear")
        if scale == "symlog":
            finite = [abs(v) for v in values if v == v and v != 0]
            ax.set_yscale("symlog", linthresh=min(finite) if finite else 1.0)
        elif scale != "linear":
            ax.set_yscale(scale)
        ax.axhline(0.0, color="0.6", lw=0.5)
        if any(ax.get_legend_handles_labels()[1]):
            ax.legend(fontsize="small")
        ax.set_ylabel(spec["ylabel"])
    if spec["logx"]:
        ax.set_xscale("log")
    ax.set_xlabel(spec["xlabel"] or spec["x"])
    ax.set_title(spec["title"])


def main(out=None):
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    draw(load(), ax)
    fig.tight_layout()
    out = Path(out) if out else TABLE.with_suffix(".png")
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else None)
'''


def write_plot_script(csv_path, spec: PlotSpec) -> Path:
    """Write ``<csv stem>_plot.py`` beside the table and return its path."""
    csv_path = Path(csv_path)
    script = csv_path.with_name(csv_path.stem + "_plot.py")
    d = asdict(spec)
    d["y"] = list(spec.y)
    body = _TEMPLATE.format(
        csv_name=csv_path.name,
        script_name=script.name,
        spec=pprint.pformat(d, indent=4, sort_dicts=True),
    )
    script.write_text(body, encoding="utf-8")
    return script


def render(script) -> Path:
    """Run a generated script in-process and return the PNG it wrote."""
    import matplotlib

    matplotlib.use("Agg")
    ns = runpy.run_path(str(script), run_name="rydcp_plot")
    return ns["main"]()


def emit_plot(csv_path, spec: PlotSpec, png: bool = True) -> tuple[Path, Path | None]:
    script = write_plot_script(csv_path, spec)
    return script, (render(script) if png else None)
