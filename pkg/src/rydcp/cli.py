"""Command-line front end (``rydcp``)."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np
from scipy import constants as sc

from . import analysis
from .atomic import AtomicState
from .config import ConfigError, load_scan_config, load_stack, parse_length, with_fermi_energy, with_model
from .cp import regime_report, total_potential
from .em import green_scattering_matsubara, green_scattering_real
from .materials import SIGMA0, GrapheneParams, kubo_conductivity, nonlocal_conductivity
from .plotting import PlotSpec, emit_plot
from .presets import PRESETS, run_preset
from .scan import read_table, run_scan, stderr_progress, write_csv

log = logging.getLogger("rydcp")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _length(text: str) -> float:
    try:
        return parse_length(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _stack(args):
    spec = load_stack(args.stack)
    stack = spec.stack
    if getattr(args, "ef", None) is not None:
        stack = with_fermi_energy(stack, args.ef)
    if getattr(args, "model", None):
        stack = with_model(stack, args.model)
    return spec, stack


def _emit(text: str, out):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_potential(args) -> int:
    _, stack = _stack(args)
    state = AtomicState(args.n, 0, 0.5)
    b = total_potential(state, stack, args.z0, args.temp, tol=args.tol)
    scale, unit = (sc.h, "J") if args.joules else (1.0, "Hz")
    flags = regime_report(state, args.z0, args.temp).flags()
    lines = [
        f"state        {state.label}",
        f"z0           {args.z0:.6g} m ({args.z0 * 1e6:.6g} um)",
        f"temperature  {args.temp:g} K",
        f"U_nres       {b.u_nres * scale:.10g} {unit}",
        f"U_res_evan   {b.u_res_evan * scale:.10g} {unit}",
        f"U_res_prop   {b.u_res_prop * scale:.10g} {unit}",
        f"U_total      {b.total * scale:.10g} {unit}",
        f"matsubara    {b.matsubara_terms} terms",
        "regime       " + ", ".join(k for k, v in flags.items() if v),
    ]
    if args.shares:
        lines.append("resonant shares (largest first):")
        for t in sorted(b.per_transition, key=lambda t: -abs(t.share))[: args.shares]:
            lines.append(f"  {t.level.label:>10}  {t.share:+.4f}  {t.value * scale:+.6g} {unit}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_scan(args) -> int:
    config = load_scan_config(args.config)
    out = args.out or config.output
    if config.model is None and args.model:
        from dataclasses import replace

        config = replace(config, model=args.model)
    points = sum(1 for _ in config.points())
    log.info("scan %s: %d points, %d worker(s)", config.name or args.config, points, args.workers)
    result = run_scan(config, workers=args.workers, timing=args.timing, progress=None if args.quiet else stderr_progress)
    text = write_csv(result.rows, out)
    if out is None:
        sys.stdout.write(text)
    elif config.plot and not args.no_plot:
        axes = [g.name for g in config.axes]
        xcol = {"z0": "z0_um", "temperature": "temperature_K", "n": "n", "fermi_energy": "fermi_energy_eV",
                "spacing": "spacing_um"}
        spec = PlotSpec(
            xcol[axes[-1]],
            ("u_total_Hz",),
            group=xcol[axes[0]] if len(axes) == 2 else None,
            logx=len(config.axes[-1].values) > 2 and _is_log(config.axes[-1].values),
            ylabel="U / h (Hz)",
            title=config.name,
        )
        script, png = emit_plot(out, spec, png=not args.no_png)
        log.info("wrote %s, %s%s", out, script, f", {png}" if png else "")
    if not result.ok:
        print(f"error: {result.n_failed} of {len(result.rows)} points failed (see the error column)", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _is_log(values) -> bool:
    v = np.asarray(values, dtype=float)
    if np.any(v <= 0):
        return False
    r = v[1:] / v[:-1]
    return bool(np.allclose(r, r[0], rtol=1e-9) and not np.allclose(np.diff(v), v[1] - v[0], rtol=1e-9))


def _floats(rows, col):
    return np.array([float(r[col]) for r in rows])


_FIT_COLUMNS = {
    "power-law": ("z0_m", "u_total_Hz"),
    "c3-two-term": ("n", "z0_m", "u_total_Hz"),
    "c3-single-power": ("n", "z0_m", "u_total_Hz"),
    "empirical": ("n", "temperature_K", "z0_m", "u_total_Hz"),
    "wavelength": ("z0_m", "u_total_Hz"),
}


def _c3_table(rows):
    """C3 per n; several z0 values per n are combined as a geometric mean of -U z0^3."""
    by_n = {}
    for r in rows:
        by_n.setdefault(int(r["n"]), []).append(-float(r["u_total_Hz"]) * float(r["z0_m"]) ** 3)
    out = []
    for n in sorted(by_n):
        v = np.array(by_n[n])
        out.append((n, float(np.exp(np.mean(np.log(v)))) if np.all(v > 0) else float(np.mean(v))))
    return out


def run_fit(table, kind: str, lambda_start: float | None = None) -> dict:
    """Fit a result table; returns a JSON-serialisable report."""
    header, rows = read_table(table)
    need = _FIT_COLUMNS.get(kind)
    if need is None:
        raise ValueError(f"unknown fit kind {kind!r}; choose from {', '.join(_FIT_COLUMNS)}")
    missing = [c for c in need if c not in header]
    if missing:
        raise ValueError(f"{table}: schema mismatch, missing column(s) {', '.join(missing)} for fit '{kind}'")
    rows = [r for r in rows if not r.get("error")]
    report = {"table": str(table), "kind": kind, "points": len(rows)}
    if kind == "power-law":
        f = analysis.fit_power_law(list(zip(_floats(rows, "z0_m"), _floats(rows, "u_total_Hz"))))
        report.update(coefficients={"C_alpha_Hz_m^alpha": f.c_alpha, "alpha": f.alpha}, residual=f.residual,
                      domain={"z0_m": list(f.domain)})
    elif kind.startswith("c3-"):
        data = _c3_table(rows)
        f = analysis.fit_c3_vs_n(data, "two-term" if kind == "c3-two-term" else "single-power")
        report.update(coefficients={f"n^{p:g}": c for p, c in f.coefficients.items()}, residual=f.residual,
                      domain={"n": list(f.domain)}, c3=[{"n": n, "c3_Hz_m3": c} for n, c in data])
    elif kind == "empirical":
        z = _floats(rows, "z0_m")
        if np.ptp(z) > 0:
            raise ValueError("empirical fit needs a single z0 in the table")
        grid = [(int(r["n"]), float(r["temperature_K"]), -float(r["u_total_Hz"]) * float(r["z0_m"]) ** 3) for r in rows]
        m = analysis.fit_empirical_model(grid, z0=float(z[0]))
        report.update(coefficients={"p1": m.to_dict()["p1"], "p2": m.to_dict()["p2"]},
                      residual={str(n): {"r2_linear_T": v[2]} for n, v in m.per_n.items()},
                      domain={"n": list(m.n_range), "temperature_K": list(m.t_range), "z0_m": m.z0})
    else:
        if lambda_start is None:
            raise ValueError("the wavelength fit needs --lambda-start")
        lam = analysis.extract_oscillation_wavelength(list(zip(_floats(rows, "z0_m"), _floats(rows, "u_total_Hz"))), lambda_start)
        report.update(coefficients={"lambda_cp_m": lam}, residual=None, domain={"lambda_start_m": lambda_start})
    return report


def cmd_fit(args) -> int:
    report = run_fit(args.table, args.kind, args.lambda_start)
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_conductivity(args) -> int:
    p = GrapheneParams(args.ef, args.gamma)
    if args.omega_log:
        omegas = np.geomspace(args.omega[0], args.omega[1], int(args.num))
    else:
        omegas = np.asarray(args.omega, dtype=float)
    rows = []
    for w in omegas:
        s = complex(kubo_conductivity(float(w), p, args.temp))
        row = {"omega_rad_s": float(w), "fermi_energy_eV": args.ef, "temperature_K": args.temp,
               "kubo_re_S": s.real, "kubo_im_S": s.imag, "kubo_re_over_sigma0": s.real / SIGMA0}
        if args.q is not None:
            sn = complex(nonlocal_conductivity(args.q, float(w), p))
            row.update(q_per_m=args.q, nonlocal_re_S=sn.real, nonlocal_im_S=sn.imag)
        rows.append(row)
    cols = ["omega_rad_s", "fermi_energy_eV", "temperature_K", "kubo_re_S", "kubo_im_S", "kubo_re_over_sigma0"]
    if args.q is not None:
        cols += ["q_per_m", "nonlocal_re_S", "nonlocal_im_S"]
    text = write_csv(rows, args.out, cols)
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_greens(args) -> int:
    _, stack = _stack(args)
    if (args.omega is None) == (args.xi is None):
        raise ValueError("give exactly one of --omega or --xi")
    if args.omega is not None:
        ev, pr = green_scattering_real(stack, args.z0, args.omega, args.temp, args.tol)
        rows = [
            {"part": part, "z0_m": args.z0, "frequency_rad_s": args.omega,
             "g_xx_re": complex(g.g_xx).real, "g_xx_im": complex(g.g_xx).imag,
             "g_zz_re": complex(g.g_zz).real, "g_zz_im": complex(g.g_zz).imag}
            for part, g in (("evanescent", ev), ("propagating", pr))
        ]
    else:
        g = green_scattering_matsubara(stack, args.z0, args.xi, args.temp, args.tol)
        rows = [{"part": "matsubara", "z0_m": args.z0, "frequency_rad_s": args.xi,
                 "g_xx_re": float(np.real(g.g_xx)), "g_xx_im": 0.0, "g_zz_re": float(np.real(g.g_zz)), "g_zz_im": 0.0,
                 "h_xx": float(np.real(g.h_xx)), "h_zz": float(np.real(g.h_zz))}]
    cols = ["part", "z0_m", "frequency_rad_s", "g_xx_re", "g_xx_im", "g_zz_re", "g_zz_im"]
    if args.xi is not None:
        cols += ["h_xx", "h_zz"]
    text = write_csv(rows, args.out, cols)
    if not args.out:
        sys.stdout.write(text)
    return EXIT_OK


def _describe_material(m) -> str:
    kind = getattr(m, "kind", type(m).__name__)
    if kind == "dielectric":
        return f"dielectric eps_r = {m.eps_r:g}"
    if kind == "drude":
        return f"Drude metal omega_p = {m.omega_p:.4g} rad/s, gamma_D = {m.gamma_d:.4g} rad/s"
    p = m.params
    t = "environment" if p.temperature is None else f"{p.temperature:g} K"
    return f"graphene ({kind}) E_F = {p.fermi_energy:g} eV, gamma = {p.gamma:.4g} rad/s, v_F = {p.fermi_velocity:.3g} m/s, T = {t}"


def cmd_describe(args) -> int:
    spec, stack = _stack(args)
    lines = [f"stack {stack.name or spec.source}"]
    for i, layer in enumerate(stack.layers):
        th = "semi-infinite" if math.isinf(layer.thickness) else f"{layer.thickness:.6g} m"
        lines.append(f"  layer {i}: {_describe_material(layer.material)}, thickness {th}")
        if i < len(stack.sheets) and stack.sheets[i] is not None:
            lines.append(f"  sheet {i}|{i + 1}: {_describe_material(stack.sheets[i])}")
    if args.n is not None and args.z0 is not None and args.temp is not None:
        rep = regime_report(AtomicState(args.n, 0, 0.5), args.z0, args.temp)
        lines += [
            f"regime for {args.n}S at z0 = {args.z0 * 1e6:g} um, T = {args.temp:g} K:",
            f"  omega_-/+    {rep.omega_minus:.5g} / {rep.omega_plus:.5g} rad/s",
            f"  z_omega      {rep.z_omega * 1e6:.5g} um (from omega_-: {rep.z_omega_minus * 1e6:.5g} um)",
            f"  z_T          {rep.z_T * 1e6:.5g} um",
            f"  T_z          {rep.T_z:.5g} K",
            f"  T_omega      {rep.t_omega:.5g} K (from omega_-: {rep.t_omega_minus:.5g} K)",
        ]
        lines += [f"  {k:<22} {'yes' if v else 'no'}" for k, v in rep.flags().items()]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_preset(args) -> int:
    if args.name == "list":
        for k, (_, doc) in PRESETS.items():
            print(f"{k:<14} {doc}")
        return EXIT_OK
    out = Path(args.out or f"rydcp-{args.name}")
    res = run_preset(args.name, out, workers=args.workers, quick=args.quick, png=not args.no_png,
                     progress=None if args.quiet else stderr_progress)
    print(json.dumps(res.summary, indent=2, sort_keys=True, default=str))
    for f in res.files:
        log.info("wrote %s", f)
    if not res.ok:
        print(f"error: {res.failed_points} scan point(s) failed", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rydcp", description="Casimir-Polder potentials of Rb nS Rydberg atoms above planar stacks.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress details")
    sub = p.add_subparsers(dest="command", required=True)

    def stack_opts(sp, atom=True):
        sp.add_argument("--stack", default="suspended-graphene", help="stack file or canonical stack name")
        sp.add_argument("--model", choices=("kubo", "nonlocal"), help="override the graphene conductivity model")
        sp.add_argument("--ef", type=float, help="override graphene Fermi energy (eV)")
        sp.add_argument("--tol", type=float, default=1e-8, help="relative tolerance")
        sp.add_argument("--out", help="output file (default: stdout)")

    sp = sub.add_parser("potential", help="CP potential of one nS state")
    stack_opts(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--z0", type=_length, required=True, help="distance, e.g. 10um or 1e-5")
    sp.add_argument("--temp", type=float, required=True, help="temperature (K)")
    sp.add_argument("--joules", action="store_true", help="report energies in J instead of Hz")
    sp.add_argument("--shares", type=int, default=0, metavar="K", help="list the K largest resonant shares")
    sp.set_defaults(func=cmd_potential)

    sp = sub.add_parser("scan", help="run a scan file, write CSV and plot script")
    sp.add_argument("config")
    sp.add_argument("--model", choices=("kubo", "nonlocal"), help="graphene model when the file sets none")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out", help="CSV path (overrides the file)")
    sp.add_argument("--timing", action="store_true", help="fill the wall_time_s column")
    sp.add_argument("--no-plot", action="store_true")
    sp.add_argument("--no-png", action="store_true", help="write the plot script without rendering it")
    sp.add_argument("--quiet", action="store_true")
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("fit", help="fit a scan table and print a JSON report")
    sp.add_argument("table")
    sp.add_argument("--kind", choices=tuple(_FIT_COLUMNS), required=True)
    sp.add_argument("--lambda-start", type=_length)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("conductivity", help="graphene sheet conductivity table")
    sp.add_argument("--ef", type=float, default=0.1)
    sp.add_argument("--gamma", type=float, default=4e12)
    sp.add_argument("--temp", type=float, default=300.0)
    sp.add_argument("--omega", type=float, nargs="+", required=True, help="angular frequencies (rad/s)")
    sp.add_argument("--omega-log", action="store_true", help="treat --omega LO HI as a log range of --num points")
    sp.add_argument("--num", type=int, default=50)
    sp.add_argument("--q", type=float, help="also evaluate the non-local model at this wavenumber (1/m)")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_conductivity)

    sp = sub.add_parser("greens", help="scattering Green tensor diagonal")
    stack_opts(sp)
    sp.add_argument("--z0", type=_length, required=True)
    sp.add_argument("--omega", type=float, help="real angular frequency (rad/s)")
    sp.add_argument("--xi", type=float, help="imaginary frequency (rad/s)")
    sp.add_argument("--temp", type=float, default=300.0)
    sp.set_defaults(func=cmd_greens, tol=1e-9)

    sp = sub.add_parser("describe", help="summarise a stack and, optionally, the regime of a state")
    stack_opts(sp)
    sp.add_argument("--n", type=int)
    sp.add_argument("--z0", type=_length)
    sp.add_argument("--temp", type=float)
    sp.set_defaults(func=cmd_describe)

    sp = sub.add_parser("preset", help="run a named figure preset ('list' to show them)")
    sp.add_argument("name", choices=("list", *PRESETS))
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--quick", action="store_true", help="coarser grids")
    sp.add_argument("--no-png", action="store_true")
    sp.add_argument("--quiet", action="store_true")
    sp.set_defaults(func=cmd_preset)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, OSError, analysis.FitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
