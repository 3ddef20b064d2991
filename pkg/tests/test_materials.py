import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import constants as sc

from rydcp.materials import (
    REGIONS,
    SIGMA0,
    Dielectric,
    DrudeMetal,
    GrapheneParams,
    classify_region,
    drude_permittivity,
    kubo_conductivity,
    lindhard_complex,
    lindhard_polarizability,
    lindhard_regions,
    nonlocal_conductivity,
    rpa_rt_polarizability,
    static_polarizability,
)

P = GrapheneParams(0.1, 4e12)


def test_universal_conductivity():
    s = kubo_conductivity(1e15, GrapheneParams(0.0, 1e3), 1.0)
    assert s.real == pytest.approx(SIGMA0, rel=1e-3)
    assert SIGMA0 == pytest.approx(6.085e-5, rel=1e-3)


def test_intraband_dc_closed_form():
    for T in (10.0, 300.0):
        ef, kT = P.ef_joule, sc.k * T
        closed = 4 * SIGMA0 / (math.pi * sc.hbar * P.gamma) * (ef + 2 * kT * math.log1p(math.exp(-ef / kT)))
        s = kubo_conductivity(1e-3j, P, T)
        assert s.real == pytest.approx(closed, rel=1e-6)
        assert abs(s.imag) < 1e-12 * abs(s.real)


def test_drude_limit_at_low_frequency():
    # well below 2 E_F the interband part is negligible
    w = 1e12
    s = kubo_conductivity(w, P, 0.0)
    drude = 4 * SIGMA0 * P.ef_joule / (math.pi * sc.hbar) * 1j / (w + 1j * P.gamma)
    assert s == pytest.approx(drude, rel=1e-3)


@settings(max_examples=30, deadline=None)
@given(w=st.floats(1e10, 1e16), ef=st.floats(0.0, 0.5), T=st.floats(0.0, 500.0))
def test_kubo_passive_and_symmetric(w, ef, T):
    p = GrapheneParams(ef, 4e12)
    s = complex(kubo_conductivity(w, p, T))
    assert s.real >= 0
    assert complex(kubo_conductivity(-w, p, T)) == pytest.approx(s.conjugate(), rel=1e-12)


def test_kubo_imaginary_axis_real_positive_decreasing():
    xi = np.geomspace(1e10, 1e16, 12)
    s = np.array([complex(kubo_conductivity(1j * x, P, 300.0)) for x in xi])
    assert np.all(np.abs(s.imag) < 1e-10 * np.abs(s.real))
    assert np.all(s.real > 0)
    assert np.all(np.diff(s.real[:6]) < 0)


def test_hole_doping_symmetric():
    a = kubo_conductivity(3e13, GrapheneParams(0.2, 4e12), 300.0)
    b = kubo_conductivity(3e13, GrapheneParams(-0.2, 4e12), 300.0)
    assert a == b


def test_region_partition():
    x, y = np.meshgrid(np.linspace(0.01, 5, 97), np.linspace(0.01, 5, 89))
    reg = classify_region(x, y)
    assert set(np.unique(reg)) <= set(REGIONS)
    assert np.all(np.char.str_len(reg) == 2)


def _boundary_points(rng, n):
    pts = []
    for _ in range(n):
        kind = rng.integers(4)
        if kind == 0:  # x + y = 2, y < x
            x = rng.uniform(1.05, 1.95); y = 2 - x
        elif kind == 1:  # x + y = 2, y > x
            x = rng.uniform(0.05, 0.95); y = 2 - x
        elif kind == 2:  # x - y = 2
            y = rng.uniform(0.05, 3); x = y + 2
        else:  # y = x + 2
            x = rng.uniform(0.05, 3); y = x + 2
        pts.append((x, y))
    return np.array(pts)


def test_lindhard_boundary_continuity():
    rng = np.random.default_rng(7)
    pts = _boundary_points(rng, 100)
    eps = 1e-12
    for x, y in pts:
        n = np.array([1.0, 1.0]) / math.sqrt(2)
        a = lindhard_regions(x - eps * n[0], y - eps * n[1])
        b = lindhard_regions(x + eps * n[0], y + eps * n[1])
        c = lindhard_regions(x - eps * n[0], y + eps * n[1])
        d = lindhard_regions(x + eps * n[0], y - eps * n[1])
        vals = [a, b, c, d]
        ref = max(abs(v) for v in vals)
        assert max(abs(v - w) for v in vals for w in vals) <= 1e-6 * ref


def test_light_cone_continuity_of_regular_part():
    # P itself diverges on y = x; S (P + 2 t1) stays finite and continuous
    for x in (0.3, 0.8, 1.4, 2.5, 3.5):
        vals = []
        for y in (x - 1e-12, x + 1e-12):
            S = np.sqrt(complex(x * x - y * y, -0.0))  # retarded branch
            vals.append(S * (lindhard_regions(x, y) + 2))
        assert abs(vals[0] - vals[1]) <= 1e-5 * max(abs(vals[0]), 1e-300) + 1e-5


def test_regions_match_continuation():
    rng = np.random.default_rng(3)
    x = rng.uniform(0.05, 4, 300)
    y = rng.uniform(0.05, 4, 300)
    keep = (np.abs(x - y) > 1e-3) & (np.abs(x + y - 2) > 1e-3) & (np.abs(np.abs(x - y) - 2) > 1e-3)
    a = lindhard_regions(x[keep], y[keep])
    b = lindhard_complex(x[keep], y[keep] + 1e-10j)
    assert np.max(np.abs(a - b) / np.abs(a)) < 1e-5


def test_static_limit():
    q = np.array([0.5, 1.0, 1.9]) * P.k_fermi
    t1 = P.k_fermi / (math.pi * sc.hbar * P.fermi_velocity)
    assert np.allclose(static_polarizability(q, P), -2 * t1, rtol=1e-14)
    assert np.all(np.diff(static_polarizability(np.array([2.5, 4, 8]) * P.k_fermi, P)) < 0)


def test_rpa_rt_reduces_to_lindhard():
    p = GrapheneParams(0.1, 1e-6 * 2e14)
    q, w = 0.7 * P.k_fermi, 2e14
    a = rpa_rt_polarizability(q, w, p)
    b = lindhard_polarizability(q, w + 1j * p.gamma, p)
    assert abs(a - b) / abs(b) < 1e-3


def test_im_p_gamma_nonpositive_grid():
    x = np.linspace(0.02, 3, 50)
    y = np.linspace(0.02, 3, 50)
    X, Y = np.meshgrid(x, y)
    pg = rpa_rt_polarizability(X.ravel() * P.k_fermi, Y.ravel() * P.ef_joule / sc.hbar, P)
    assert np.all(np.isfinite(pg))
    assert np.all(pg.imag <= 0)


def test_nonlocal_matches_kubo_small_q():
    w = 1e12
    s_nl = complex(nonlocal_conductivity(1e3, w, P))
    s_k = complex(kubo_conductivity(w, P, 0.0))
    assert abs(s_nl - s_k) / abs(s_k) < 0.10


def test_drude_and_dielectric():
    assert abs(drude_permittivity(1e25) - 1) < 1e-10
    assert abs(drude_permittivity(1.35e16, gamma_d=0.0)) < 1e-12
    xi = np.geomspace(1e10, 1e18, 20)
    e = np.array([complex(DrudeMetal().epsilon(1j * x)) for x in xi])
    assert np.all(np.abs(e.imag) < 1e-9 * e.real) and np.all(e.real > 1) and np.all(np.diff(e.real) < 0)
    assert Dielectric(3.58).epsilon(1e12) == 3.58
    with pytest.raises(ValueError):
        Dielectric(0.5)
