"""Ready-made experiments that regenerate the standard figure types.

Every preset writes its inputs (scan YAML), result tables (CSV), a plot
script plus PNG per table, and a ``<name>_summary.json`` with the headline
numbers, all into one output directory.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from scipy import constants as sc

from . import analysis
from .atomic import AtomicState, transition_frequency
from .config import load_scan_config, load_stack
from .cp import dominant_frequencies, resonant_potential, total_potential
from .materials import (
    GrapheneParams,
    classify_region,
    kubo_conductivity,
    rpa_rt_polarizability,
    REGIONS,
)
from .plotting import PlotSpec, emit_plot
from .scan import run_scan, write_csv

__all__ = ["PRESETS", "PresetResult", "run_preset"]


@dataclass
class PresetResult:
    name: str
    files: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    failed_points: int = 0

    @property
    def ok(self) -> bool:
        return self.failed_points == 0


class _Runner:
    def __init__(self, name, out_dir, workers, quick, png, progress):
        self.res = PresetResult(name)
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.workers = workers
        self.quick = quick
        self.png = png
        self.progress = progress

    def scan(self, tag: str, cfg: dict, plot: PlotSpec | None):
        cfg = {"schema_version": 1, "name": tag, **cfg, "output": {"csv": f"{tag}.csv"}}
        path = self.out / f"{tag}.yaml"
        path.write_text(yaml.safe_dump(cfg, sort_keys=False), encoding="utf-8")
        config = load_scan_config(path)
        result = run_scan(config, workers=self.workers, progress=self.progress)
        write_csv(result.rows, config.output)
        self.res.failed_points += result.n_failed
        self.res.files += [path, Path(config.output)]
        if plot is not None:
            self.plot(config.output, plot)
        return [r for r in result.rows if not r["error"]]

    def table(self, tag, rows, columns, plot: PlotSpec | None = None):
        path = self.out / f"{tag}.csv"
        write_csv(rows, path, columns)
        self.res.files.append(path)
        if plot is not None:
            self.plot(path, plot)
        return path

    def plot(self, csv_path, spec):
        script, png = emit_plot(csv_path, spec, png=self.png)
        self.res.files += [p for p in (script, png) if p is not None]

    def finish(self):
        path = self.out / f"{self.res.name}_summary.json"
        path.write_text(json.dumps(self.res.summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        self.res.files.append(path)
        return self.res


def _u(x_m):
    return f"{x_m * 1e6:.6g} um"


def _c3_rows(rows):
    return [(r["n"], -r["u_total_Hz"] * r["z0_m"] ** 3) for r in rows]


def _fig2(r: _Runner):
    # z0 tracks each state: a tenth of the nS -> (n-1)P1/2 wavelength keeps every point non-retarded
    gold, graphene = load_stack("gold-slab").stack, load_stack("suspended-graphene").stack
    ns = list(range(6, 51, 4 if r.quick else 1))
    t = 300.0
    rows = []
    for n in ns:
        u = AtomicState(n, 0, 0.5)
        z0 = 0.1 * 2 * math.pi * sc.c / abs(transition_frequency(u, AtomicState(n - 1, 1, 0.5)))
        ug = total_potential(u, gold, z0, t).total
        ugr = total_potential(u, graphene, z0, t).total
        rows.append({"n": n, "z0_m": z0, "z0_um": z0 * 1e6, "temperature_K": t, "u_gold_Hz": ug,
                     "u_graphene_Hz": ugr, "graphene_over_gold": ugr / ug})
    r.table(
        "fig2", rows, ("n", "z0_m", "z0_um", "temperature_K", "u_gold_Hz", "u_graphene_Hz", "graphene_over_gold"),
        PlotSpec("n", ("u_gold_Hz", "u_graphene_Hz"), xlabel="n", ylabel="-U / h (Hz)", scale_y=-1.0, yscale="log",
                 title="gold slab vs graphene, z0 = lambda/10, 300 K"),
    )
    ratio = [x["graphene_over_gold"] for x in rows]
    flips = [rows[k + 1]["n"] for k in range(len(rows) - 1) if (ratio[k] - 1) * (ratio[k + 1] - 1) < 0]
    r.res.summary.update(
        z0_range_um=[rows[0]["z0_um"], rows[-1]["z0_um"]],
        ratio_crosses_one_at_n=flips,
    )


def _fig3(r: _Runner):
    num = 40 if r.quick else 100
    summary = {}
    for model in ("kubo", "nonlocal"):
        rows = r.scan(
            f"fig3_{model}",
            {
                "stack": "suspended-graphene",
                "model": model,
                "atom": {"n": 15},
                "axes": {"z0": {"start": "1 um", "stop": "300 um", "num": num, "spacing": "log"}},
                "fixed": {"temperature": 10},
            },
            PlotSpec(
                "z0_um",
                ("u_nres_Hz", "u_res_evan_Hz", "u_res_prop_Hz", "u_total_Hz"),
                xlabel="z0 (um)",
                ylabel="U / h (Hz)",
                logx=True,
                title=f"15S, 10 K, {model} graphene",
            ),
        )
        z = np.array([x["z0_m"] for x in rows])
        u = np.array([x["u_total_Hz"] for x in rows])
        zc = analysis.zero_crossings(z, u)
        z_w = sc.c / dominant_frequencies(AtomicState(15, 0, 0.5))[1]
        retarded = zc[zc > z_w]
        summary[model] = {
            "zero_crossings_um": [float(x * 1e6) for x in zc],
            "first_retarded_crossing_um": float(retarded[0] * 1e6) if retarded.size else None,
        }
    r.res.summary.update(summary)


def _lambda(u, k):
    return 2 * math.pi * sc.c / abs(transition_frequency(u, k))


def _fig4(r: _Runner):
    ns = [15] if r.quick else [15, 18, 21, 24]
    temperature = 10.0
    rows = []
    for n in ns:
        u = AtomicState(n, 0, 0.5)
        lam_down = _lambda(u, AtomicState(n - 1, 1, 1.5))
        lam_up = _lambda(u, AtomicState(n, 1, 1.5))
        lo, hi = 0.3 * lam_down, 2.0 * lam_down
        trace = r.scan(
            f"fig4_n{n}",
            {
                "stack": "suspended-graphene",
                "atom": {"n": n},
                "axes": {"z0": {"start": _u(lo), "stop": _u(hi), "num": 60 if r.quick else 160}},
                "fixed": {"temperature": temperature},
            },
            None,
        )
        try:
            lam_cp = analysis.extract_oscillation_wavelength(
                [(x["z0_m"], x["u_total_Hz"]) for x in trace], lam_down
            )
        except analysis.FitError:
            lam_cp = math.nan
        rows.append(
            {"n": n, "temperature_K": temperature, "lambda_cp_um": lam_cp * 1e6,
             "half_lambda_down_um": lam_down * 5e5, "half_lambda_up_um": lam_up * 5e5}
        )
    cols = ("n", "temperature_K", "lambda_cp_um", "half_lambda_down_um", "half_lambda_up_um")
    r.table("fig4", rows, cols, PlotSpec("n", cols[2:], xlabel="n", ylabel="length (um)", title="oscillation wavelength"))
    r.res.summary["lambda_cp_um"] = {str(x["n"]): x["lambda_cp_um"] for x in rows}


def _fig6a(r: _Runner):
    ns = list(range(20, 51, 10 if r.quick else 2))
    rows = r.scan(
        "fig6a",
        {"stack": "suspended-graphene", "axes": {"n": ns}, "fixed": {"z0": "10 um", "temperature": 10}},
        PlotSpec("n", ("u_total_Hz",), xlabel="n", ylabel="U / h (kHz)", scale_y=1e-3, title="n scan, 10 um, 10 K"),
    )
    if len(rows) >= 4:
        nn = np.array([x["n"] for x in rows], float)
        uu = np.abs([x["u_total_Hz"] for x in rows])
        r.res.summary["n_exponent"] = float(np.polyfit(np.log(nn), np.log(uu), 1)[0])


def _fig6b(r: _Runner):
    ts = {"start": 10, "stop": 400, "num": 5 if r.quick else 14}
    rows = r.scan(
        "fig6b",
        {"stack": "suspended-graphene", "atom": {"n": 40}, "axes": {"temperature": ts}, "fixed": {"z0": "5 um"}},
        PlotSpec("temperature_K", ("u_total_Hz",), xlabel="T (K)", ylabel="U / h (MHz)", scale_y=1e-6, title="40S, 5 um"),
    )
    if len(rows) >= 2:
        a, b, r2 = analysis.linear_fit([x["temperature_K"] for x in rows], [x["u_total_Hz"] for x in rows])
        r.res.summary["linear_T"] = {"slope_Hz_per_K": a, "intercept_Hz": b, "r2": r2}


def _fig6(r: _Runner):
    _fig6a(r)
    _fig6b(r)


def _fig7(r: _Runner):
    stack = load_stack("suspended-graphene").stack
    ns = [25, 35, 45] if r.quick else [25, 30, 35, 40, 45]
    rows, down = [], {}
    for n in ns:
        u = AtomicState(n, 0, 0.5)
        _, _, terms = resonant_potential(u, stack, 5e-6, 10.0)
        down[str(n)] = float(sum(abs(t.share) for t in terms if t.omega < 0))
        for t in terms:
            if t.level.l == 1 and n - 2 <= t.level.n <= n + 1:
                rows.append({"n": n, "level": t.level.label, "omega_rad_s": t.omega, "share": t.share})
    r.table(
        "fig7", rows, ("n", "level", "omega_rad_s", "share"),
        PlotSpec("level", ("share",), group="n", kind="bar", ylabel="signed share", title="resonant shares, 5 um, 10 K"),
    )
    r.res.summary["downward_share"] = down


def _fig8(r: _Runner):
    u = AtomicState(30, 0, 0.5)
    omega = abs(transition_frequency(u, AtomicState(30, 1, 0.5)))
    rows = []
    for t in (10.0, 300.0):
        for ef in np.linspace(0.0, 0.5, 11 if r.quick else 51):
            s = complex(kubo_conductivity(omega, GrapheneParams(float(ef), 4e12), t))
            s0 = sc.e**2 / (4 * sc.hbar)
            rows.append({"temperature_K": t, "fermi_energy_eV": float(ef), "omega_rad_s": omega,
                         "sigma_re_S": s.real, "sigma_im_S": s.imag, "sigma_re_over_sigma0": s.real / s0})
    cols = ("temperature_K", "fermi_energy_eV", "omega_rad_s", "sigma_re_S", "sigma_im_S", "sigma_re_over_sigma0")
    r.table("fig8_context", rows, cols,
            PlotSpec("fermi_energy_eV", ("sigma_re_S",), group="temperature_K", xlabel="E_F (eV)",
                     ylabel="Re sigma (S)", title="Kubo conductivity at the 30S-30P line"))


def _fig9(r: _Runner):
    ns = [20, 25, 30, 35, 40]
    ts = [10.0, 85.0, 160.0, 235.0, 310.0, 400.0]
    z_fit = 5e-6
    grid = r.scan(
        "fig9_grid",
        {"stack": "suspended-graphene", "axes": {"n": ns, "temperature": ts}, "fixed": {"z0": "5 um"}},
        None,
    )
    model = analysis.fit_empirical_model([(x["n"], x["temperature_K"], -x["u_total_Hz"] * z_fit**3) for x in grid], z0=z_fit)
    audit = r.scan(
        "fig9_audit",
        {
            "stack": "suspended-graphene",
            "axes": {"n": [20, 30, 40], "z0": {"start": "1 um", "stop": "10 um", "num": 4 if r.quick else 10, "spacing": "log"}},
            "fixed": {"temperature": 10},
        },
        None,
    ) + r.scan(
        "fig9_audit_300K",
        {
            "stack": "suspended-graphene",
            "axes": {"n": [20, 30, 40], "z0": {"start": "1 um", "stop": "10 um", "num": 4 if r.quick else 10, "spacing": "log"}},
            "fixed": {"temperature": 300},
        },
        None,
    )
    rows, worst = [], {}
    for x in audit:
        emp = float(analysis.empirical_potential(model, x["n"], x["temperature_K"], x["z0_m"]))
        err = emp / x["u_total_Hz"] - 1
        key = f"{x['n']}S@{x['temperature_K']:g}K"
        worst[key] = max(worst.get(key, 0.0), abs(err))
        rows.append({"n": x["n"], "temperature_K": x["temperature_K"], "z0_um": x["z0_um"],
                     "u_full_Hz": x["u_total_Hz"], "u_empirical_Hz": emp, "relative_error": err})
    r.table("fig9", rows, ("n", "temperature_K", "z0_um", "u_full_Hz", "u_empirical_Hz", "relative_error"),
            PlotSpec("z0_um", ("relative_error",), group="n", xlabel="z0 (um)", title="empirical formula error", logx=True))
    r.res.summary["model"] = model.to_dict()
    r.res.summary["max_relative_error"] = worst


def _fig10(r: _Runner):
    ref = total_potential(AtomicState(30, 0, 0.5), load_stack("suspended-graphene").stack, 2e-6, 300.0).total
    d = {"start": "1 nm", "stop": "1 um", "num": 10 if r.quick else 31, "spacing": "log"}
    out = {"single_layer_Hz": ref}
    for tag, stack in (("vacuum", "graphene-vacuum-graphene"), ("hbn", "graphene-hbn-graphene")):
        rows = r.scan(
            f"fig10_{tag}",
            {"stack": stack, "atom": {"n": 30}, "axes": {"spacing": d}, "fixed": {"z0": "2 um", "temperature": 300}},
            PlotSpec("spacing_um", ("u_total_Hz",), xlabel="d (um)", ylabel="U / h (MHz)", scale_y=1e-6, logx=True,
                     title=f"30S, 2 um, 300 K, {tag} spacer"),
        )
        if rows:
            u = np.array([x["u_total_Hz"] for x in rows])
            i = int(np.argmin(u))
            out[tag] = {"most_attractive_d_nm": rows[i]["spacing_m"] * 1e9, "ratio_at_max_d": float(u[-1] / ref)}
    r.res.summary.update(out)


def _fig11(r: _Runner):
    r.scan(
        "fig11",
        {
            "stack": "graphene-hbn-graphene",
            "atom": {"n": 30},
            "axes": {
                "fermi_energy": {"start": 0.05, "stop": 0.4, "num": 3 if r.quick else 8},
                "spacing": {"start": "1 nm", "stop": "1 um", "num": 4 if r.quick else 10, "spacing": "log"},
            },
            "fixed": {"z0": "2 um", "temperature": 300},
        },
        PlotSpec("spacing_um", ("u_total_Hz",), group="fermi_energy_eV", kind="image", xlabel="d (um)",
                 ylabel="U / h (MHz)", scale_y=1e-6, logx=True, title="30S, 2 um, 300 K",
                 extra={"group_label": "E_F (eV)"}),
    )


def _fig12(r: _Runner):
    k = 40 if r.quick else 150
    xs = np.linspace(0.02, 3.0, k)
    ys = np.linspace(0.02, 3.0, k)
    X, Y = np.meshgrid(xs, ys)
    reg = classify_region(X, Y)
    code = {name: i for i, name in enumerate(REGIONS)}
    rows = [{"x": float(a), "y": float(b), "region": str(c), "region_code": code[str(c)]}
            for a, b, c in zip(X.ravel(), Y.ravel(), reg.ravel())]
    r.table("fig12", rows, ("x", "y", "region", "region_code"),
            PlotSpec("x", ("region_code",), group="y", kind="image", xlabel="q / k_F", ylabel="region",
                     title="Lindhard regions", extra={"group_label": "hbar omega / E_F"}))


def _fig13(r: _Runner):
    p = GrapheneParams(0.1, 4e12)
    k = 20 if r.quick else 50
    xs = np.linspace(0.05, 3.0, k)
    ys = np.linspace(0.05, 3.0, k)
    rows = []
    for y in ys:
        q = xs * p.k_fermi
        w = y * p.ef_joule / sc.hbar
        pg = rpa_rt_polarizability(q, w, p) * sc.hbar * p.fermi_velocity * math.pi / p.k_fermi
        for x, v in zip(xs, pg):
            rows.append({"x": float(x), "y": float(y), "re_p_over_t1": float(v.real), "im_p_over_t1": float(v.imag)})
    r.table("fig13", rows, ("x", "y", "re_p_over_t1", "im_p_over_t1"),
            PlotSpec("x", ("im_p_over_t1",), group="y", kind="image", xlabel="q / k_F", ylabel="Im P_gamma / t1",
                     title="relaxation-time polarizability", extra={"group_label": "hbar omega / E_F"}))
    r.res.summary["max_im_p_over_t1"] = max(x["im_p_over_t1"] for x in rows)


def _fig10_11(r):
    _fig10(r)
    _fig11(r)


def _fig12_13(r):
    _fig12(r)
    _fig13(r)


PRESETS = {
    "fig2": (_fig2, "gold slab vs suspended graphene over n, z0 a tenth of the nS-(n-1)P wavelength, 300 K"),
    "fig3": (_fig3, "15S distance scan at 10 K, Kubo vs non-local graphene"),
    "fig4": (_fig4, "oscillation wavelength of the retarded tail vs n"),
    "fig6": (_fig6, "n scan (fig6a) and T scan (fig6b)"),
    "fig6a": (_fig6a, "n scan at z0 = 10 um, 10 K"),
    "fig6b": (_fig6b, "40S temperature scan at z0 = 5 um"),
    "fig7": (_fig7, "signed resonant shares of the nearby P levels"),
    "fig8-context": (_fig8, "Kubo conductivity vs Fermi energy"),
    "fig9": (_fig9, "empirical C3(n, T) model and its error"),
    "fig10": (_fig10, "double-layer spacing scan"),
    "fig11": (_fig11, "double-layer map over spacing and Fermi energy"),
    "fig10-11": (_fig10_11, "fig10 and fig11"),
    "fig12": (_fig12, "Lindhard region map"),
    "fig13": (_fig13, "relaxation-time polarizability map"),
    "fig12-13": (_fig12_13, "fig12 and fig13"),
}


def run_preset(name: str, out_dir, workers: int = 1, quick: bool = False, png: bool = True, progress=None) -> PresetResult:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    r = _Runner(name, out_dir, workers, quick, png, progress)
    PRESETS[name][0](r)
    return r.finish()
