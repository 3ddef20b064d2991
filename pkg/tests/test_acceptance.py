"""Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.

Run with ``pytest tests/test_acceptance.py`` or directly as a script.
The lines are printed in the pytest terminal summary.
"""

import math
import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import constants as sc

from rydcp.analysis import (
    extract_oscillation_wavelength,
    fit_c3_vs_n,
    fit_empirical_model,
    fit_power_law,
    empirical_potential,
    linear_fit,
    zero_crossings,
)
from rydcp.atomic import AtomicState, transition_frequency
from rydcp.config import load_scan_config, load_stack
from rydcp.cp import total_potential
from rydcp.em import PerfectMirror, green_scattering_real
from rydcp.materials import (
    SIGMA0,
    GrapheneParams,
    classify_region,
    kubo_conductivity,
    lindhard_regions,
    rpa_rt_polarizability,
)
from rydcp.scan import run_scan, write_csv

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from tests.conftest import ACCEPTANCE_LINES  # noqa: E402

UM = 1e-6
_BREAKDOWNS = []


def record(num, ok, text):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {num} {text}")
    return ok


def _u(state, stack, z0, t):
    b = total_potential(state, stack, z0, t)
    _BREAKDOWNS.append(b)
    return b.total


def nS(n):
    return AtomicState(n, 0, 0.5)


@pytest.fixture(scope="module")
def kubo():
    return load_stack("suspended-graphene").stack


@pytest.fixture(scope="module")
def nonlocal_():
    from rydcp.config import with_model

    return with_model(load_stack("suspended-graphene").stack, "nonlocal")


def test_01_universal_conductivity():
    p = GrapheneParams(0.0, 1e6)
    worst = max(abs(complex(kubo_conductivity(w, p, 10.0)).real / SIGMA0 - 1) for w in (1e14, 1e15, 3e15))
    assert record(1, worst < 5e-3, f"universal conductivity: max |Re sigma/(e^2/4hbar) - 1| = {worst:.2e} (tol 5e-3)")


def _g0_t(R, k):
    return np.exp(1j * k * R) * (k * k * R * R + 1j * k * R - 1) / (4 * math.pi * k * k * R**3)


def _g0_l(R, k):
    return np.exp(1j * k * R) * (1 - 1j * k * R) / (2 * math.pi * k * k * R**3)


def test_02_perfect_mirror_oracle():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(10):
        # non-retarded window: z0 omega / c between 1e-4 and 0.5
        z0 = 10 ** rng.uniform(-7, -4)
        omega = 10 ** rng.uniform(-4, math.log10(0.5)) * sc.c / z0
        k = omega / sc.c
        ev, pr = green_scattering_real(PerfectMirror(), z0, omega, rtol=1e-10)
        for got, want in ((ev.g_zz + pr.g_zz, _g0_l(2 * z0, k)), (ev.g_xx + pr.g_xx, -_g0_t(2 * z0, k))):
            worst = max(worst, abs(got / want - 1))
    assert record(2, worst < 1e-6, f"perfect-mirror oracle: max relative error {worst:.2e} over 10 points (tol 1e-6)")


def test_03_inverse_cube_law(kubo):
    z = np.geomspace(1 * UM, 3 * UM, 7)
    fit = fit_power_law([(zi, _u(nS(15), kubo, zi, 10.0)) for zi in z])
    slope = -fit.alpha
    assert record(3, abs(slope + 3) <= 0.05, f"15S 10 K log-log slope on [1, 3] um = {slope:.4f} (want -3 +- 0.05)")


def test_04_n4_scaling(kubo):
    z0 = 10 * UM
    ns = np.arange(20, 51, 5)
    u = np.array([_u(nS(int(n)), kubo, z0, 10.0) for n in ns])
    p = np.polyfit(np.log(ns), np.log(np.abs(u)), 1)[0]
    two = fit_c3_vs_n(np.column_stack([ns, -u * z0**3]))
    e4 = two.coefficients[4.0] / 1.923e-16 - 1
    e3 = two.coefficients[3.0] / -1.840e-15 - 1
    ok = 4.2 <= p <= 4.6 and abs(e4) <= 0.10 and abs(e3) <= 0.10
    assert record(
        4, ok,
        f"n-scaling exponent {p:.3f} (want [4.2, 4.6]); C3 = {two.coefficients[4.0]:.4e} n^4 "
        f"{two.coefficients[3.0]:+.4e} n^3 (deviations {e4:+.1%}, {e3:+.1%}; tol 10%)",
    )


def test_05_spot_value(kubo):
    u = _u(nS(30), kubo, 10 * UM, 10.0)
    want = -(1.923e-16 * 30**4 - 1.840e-15 * 30**3) / (10 * UM) ** 3
    rel = u / want - 1
    assert record(5, abs(rel) <= 0.15, f"U(30S, 10 K, 10 um) = {u / 1e3:.2f} kHz vs {want / 1e3:.2f} kHz ({rel:+.1%}; tol 15%)")


def test_06_linear_in_temperature(kubo):
    t = np.linspace(50, 400, 8)
    u = [_u(nS(40), kubo, 5 * UM, ti) for ti in t]
    _, _, r2 = linear_fit(t, u)
    assert record(6, r2 > 0.999, f"40S at 5 um, T in [50, 400] K: linear R^2 = {r2:.6f} (want > 0.999)")


def test_07_oscillation_wavelength(kubo):
    lam = 2 * math.pi * sc.c / abs(transition_frequency(nS(15), AtomicState(14, 1, 0.5)))
    z = np.arange(2.0, 301.0, 2.0) * UM
    u = np.array([_u(nS(15), kubo, zi, 10.0) for zi in z])
    z_omega = lam / (2 * math.pi)
    # the first crossing past the near zone; a small-z0 sign change from the
    # repulsive evanescent resonant part is excluded by this cut
    far = zero_crossings(z, u)
    far = far[far > z_omega]
    first = far[0] if far.size else math.nan
    lam_cp = extract_oscillation_wavelength(np.column_stack([z, u]), lam)
    rel = lam_cp / (lam / 2) - 1
    ok = abs(rel) <= 0.10 and 60 * UM <= first <= 80 * UM
    assert record(
        7, ok,
        f"15S 10 K: lambda_CP = {lam_cp / UM:.1f} um vs lambda/2 = {lam / 2 / UM:.1f} um ({rel:+.1%}; tol 10%), "
        f"first far-zone crossing {first / UM:.1f} um (want [60, 80])",
    )


def test_08_kubo_vs_nonlocal(kubo, nonlocal_):
    worst, weaker = 0.0, True
    for z0 in np.geomspace(1 * UM, 10 * UM, 5):
        a = _u(nS(30), kubo, z0, 10.0)
        b = _u(nS(30), nonlocal_, z0, 10.0)
        worst = max(worst, abs(b / a - 1))
        weaker &= abs(b) < abs(a)
    assert record(
        8, worst <= 0.05 and weaker,
        f"Kubo vs non-local, 30S 10 K: max difference {worst:.2%} (tol 5%), non-local weaker everywhere: {weaker}",
    )


def test_09_empirical_formula(kubo):
    z_fit = 5 * UM
    grid = [(n, t, -_u(nS(n), kubo, z_fit, t) * z_fit**3) for n in (20, 25, 30, 35, 40) for t in (10, 85, 160, 235, 310, 400)]
    model = fit_empirical_model(grid, z0=z_fit)
    limits = {20: 0.10, 30: 0.01, 40: 0.01}
    bad, parts = [], []
    for n, tol in limits.items():
        for t in (10.0, 300.0):
            err = max(
                abs(empirical_potential(model, n, t, z0) / _u(nS(n), kubo, z0, t) - 1)
                for z0 in np.geomspace(1 * UM, 10 * UM, 4)
            )
            parts.append(f"{n}S@{t:g}K {err:.2%}")
            if err >= tol:
                bad.append(f"{n}S@{t:g}K")
    ok = not bad
    text = "empirical formula max error: " + ", ".join(parts) + " (tol 10% for 20S, 1% for 30S/40S)"
    if bad:
        text += "; over tolerance: " + ", ".join(bad)
    assert record(9, ok, text)


def test_10_double_layer(kubo):
    single = _u(nS(30), kubo, 2 * UM, 300.0)
    spec = load_stack("graphene-vacuum-graphene")
    ratio = _u(nS(30), spec.with_spacing(1 * UM), 2 * UM, 300.0) / single
    d = np.geomspace(1e-9, 1e-6, 31)
    u = np.array([_u(nS(30), spec.with_spacing(di), 2 * UM, 300.0) for di in d])
    d_min = d[int(np.argmin(u))]
    ok = abs(ratio - 1) <= 0.02 and 5.5e-9 <= d_min <= 16.5e-9
    assert record(
        10, ok,
        f"double layer: U(d = 1 um)/U(single) = {ratio:.5f} (tol 2%); most attractive at d = {d_min * 1e9:.1f} nm "
        "(want 11 nm +- 50%)",
    )


def _boundary_points(rng, n):
    pts = []
    for i in range(n):
        kind = i % 4
        if kind == 0:
            x = rng.uniform(1.05, 1.95); y = 2 - x
        elif kind == 1:
            x = rng.uniform(0.05, 0.95); y = 2 - x
        elif kind == 2:
            y = rng.uniform(0.05, 3); x = y + 2
        else:
            x = rng.uniform(0.05, 3); y = x + 2
        pts.append((x, y))
    return pts


def test_11_lindhard_regions():
    rng = np.random.default_rng(11)
    eps = 1e-12
    worst, crossed = 0.0, 0
    for x, y in _boundary_points(rng, 100):
        probes = [(x + sx * eps, y + sy * eps) for sx in (-1, 1) for sy in (-1, 1)]
        vals = [complex(lindhard_regions(px, py)) for px, py in probes]
        crossed += len({str(classify_region(px, py)) for px, py in probes}) > 1
        ref = max(abs(v) for v in vals)
        worst = max(worst, max(abs(a - b) for a in vals for b in vals) / ref)
    p = GrapheneParams(0.1, 4e12)
    q = np.linspace(0.02, 3, 50) * p.k_fermi
    w = np.linspace(0.02, 3, 50) * p.ef_joule / sc.hbar
    Q, W = np.meshgrid(q, w)
    pg = rpa_rt_polarizability(Q.ravel(), W.ravel(), p)
    max_im = float(np.max(pg.imag))
    ok = worst <= 1e-6 and crossed == 100 and max_im <= 0 and np.all(np.isfinite(pg))
    assert record(
        11, ok,
        f"Lindhard boundaries: max jump {worst:.1e} over {crossed} straddled points (tol 1e-6); "
        f"max Im P_gamma on 50x50 grid = {max_im:.2e} (want <= 0)",
    )


def test_12_decomposition_and_determinism(tmp_path):
    f = tmp_path / "det.yaml"
    f.write_text(
        "schema_version: 1\nstack: graphene-hbn-graphene\natom: {n: 25}\n"
        "axes:\n  z0: {start: 1 um, stop: 20 um, num: 4, spacing: log}\n  temperature: [10, 300]\n"
    )
    cfg = load_scan_config(f)
    first = run_scan(cfg)
    text = write_csv(first.rows)
    identical = text == write_csv(run_scan(cfg).rows) == write_csv(run_scan(cfg, workers=2).rows)
    rels = [
        abs(r["u_total_Hz"] - (r["u_nres_Hz"] + r["u_res_evan_Hz"] + r["u_res_prop_Hz"])) / abs(r["u_total_Hz"])
        for r in first.rows
    ]
    rels += [abs(b.total - math.fsum((b.u_nres, b.u_res_evan, b.u_res_prop))) / abs(b.total) for b in _BREAKDOWNS if b.total]
    worst = max(rels)
    ok = first.ok and identical and worst <= 1e-10
    assert record(
        12, ok,
        f"decomposition: max relative residual {worst:.1e} over {len(rels)} points (tol 1e-10); "
        f"repeated and 2-worker scans byte-identical: {identical}",
    )


if __name__ == "__main__":
    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    print()
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
        print(line)
    sys.exit(code)
