import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rydcp.analysis import (
    FitError,
    extract_oscillation_wavelength,
    fit_c3_vs_n,
    fit_empirical_model,
    fit_power_law,
    empirical_potential,
    linear_fit,
    zero_crossings,
)

Q4, Q3 = 1.923e-16, -1.840e-15
P1 = {7.0: -4e-25, 0.0: -9.38e-15}
P2 = {4.0: 1.866e-16, 3.0: -1.614e-15}


def _poly(c, n):
    return sum(v * n**p for p, v in c.items())


def test_power_law_recovers_cubic():
    z = np.geomspace(1e-6, 1e-5, 12)
    fit = fit_power_law(np.column_stack([z, -2.5e-12 / z**3]))
    assert fit.alpha == pytest.approx(3.0, rel=1e-10)
    assert fit.c_alpha == pytest.approx(2.5e-12, rel=1e-10)
    assert fit.residual < 1e-10
    assert fit(2e-6) == pytest.approx(-2.5e-12 / 8e-18, rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(scale=st.floats(1e-3, 1e3), alpha=st.floats(1.0, 5.0), c=st.floats(1e-20, 1e-5))
def test_power_law_scale_equivariant(scale, alpha, c):
    z = np.geomspace(1e-6, 1e-4, 8)
    u = -c / z**alpha * (1 + 0.01 * np.sin(7 * np.log(z)))
    a = fit_power_law(np.column_stack([z, u]))
    b = fit_power_law(np.column_stack([z, scale * u]))
    assert b.c_alpha == pytest.approx(scale * a.c_alpha, rel=1e-8)
    assert b.alpha == pytest.approx(a.alpha, rel=1e-10, abs=1e-12)


def test_power_law_rejects_bad_samples():
    z = np.geomspace(1e-6, 1e-5, 6)
    with pytest.raises(FitError, match="sign"):
        fit_power_law(np.column_stack([z, np.sin(z * 1e6)]))
    with pytest.raises(FitError):
        fit_power_law(np.column_stack([z[:3], -1 / z[:3] ** 3]))


def test_c3_two_term_round_trip():
    n = np.arange(20, 51, 5, dtype=float)
    fit = fit_c3_vs_n(np.column_stack([n, Q4 * n**4 + Q3 * n**3]))
    assert fit.coefficients[4.0] == pytest.approx(Q4, rel=1e-8)
    assert fit.coefficients[3.0] == pytest.approx(Q3, rel=1e-8)


def test_c3_single_power_exponent():
    # the exponent drifts with the n range sampled; 20..50 gives 4.47
    n = np.arange(20, 51, 5, dtype=float)
    fit = fit_c3_vs_n(np.column_stack([n, Q4 * n**4 + Q3 * n**3]), form="single-power")
    (p, a), = fit.coefficients.items()
    assert p == pytest.approx(4.385, abs=0.1)
    assert fit.residual < 0.05


def test_c3_single_power_round_trip():
    n = np.arange(20, 41, 2, dtype=float)
    fit = fit_c3_vs_n(np.column_stack([n, 3.5e-17 * n**4.4]), form="single-power")
    (p, a), = fit.coefficients.items()
    assert p == pytest.approx(4.4, rel=1e-8)
    assert a == pytest.approx(3.5e-17, rel=1e-8)


def test_c3_degenerate_input():
    with pytest.raises(FitError):
        fit_c3_vs_n([(20, 1e-11), (30, 2e-11)])
    with pytest.raises(FitError, match="rank"):
        fit_c3_vs_n([(30, 1e-11)] * 6)
    with pytest.raises(FitError, match="form"):
        fit_c3_vs_n([(n, 1e-11) for n in range(20, 26)], form="cubic")


def _grid(p1, p2, ns=(20, 25, 30, 35, 40), ts=(10, 85, 160, 235, 310, 400)):
    return [(n, t, _poly(p1, n) * t + _poly(p2, n)) for n in ns for t in ts]


def test_empirical_round_trip():
    m = fit_empirical_model(_grid(P1, P2), z0=5e-6)
    for p, v in P1.items():
        assert m.p1[p] == pytest.approx(v, rel=1e-2)
    for p, v in P2.items():
        assert m.p2[p] == pytest.approx(v, rel=1e-2)
    # own model family is recovered essentially exactly
    for p, v in P2.items():
        assert m.p2[p] == pytest.approx(v, rel=1e-8)


def test_empirical_full_basis_reproduces_data():
    grid = _grid(P1, P2, ns=tuple(range(20, 41, 2)))
    m = fit_empirical_model(grid, basis="full")
    for n, t, c in grid:
        assert m.c3(n, t) == pytest.approx(c, rel=1e-6)


def test_empirical_constant_in_t_gives_zero_slope():
    m = fit_empirical_model(_grid({7.0: 0.0, 0.0: 0.0}, P2))
    assert abs(m.p1_of(30)) < 1e-12 * abs(m.p2_of(30))


def test_empirical_grid_requirements():
    with pytest.raises(FitError, match="100 K"):
        fit_empirical_model(_grid(P1, P2, ts=(10, 20, 30, 40, 50)))
    with pytest.raises(FitError, match="5 points"):
        fit_empirical_model(_grid(P1, P2, ts=(10, 200, 400)))
    with pytest.raises(FitError, match="basis"):
        fit_empirical_model(_grid(P1, P2), basis="odd")


def test_empirical_potential_scaling_and_domain():
    m = fit_empirical_model(_grid(P1, P2), z0=5e-6)
    u1 = empirical_potential(m, 30, 300.0, 2e-6)
    assert u1 == pytest.approx(-m.c3(30, 300.0) / 8e-18)
    assert empirical_potential(m, 30, 300.0, 4e-6) == pytest.approx(u1 / 8)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        empirical_potential(m, 30, 300.0, 2e-6)
    with pytest.warns(UserWarning, match="outside"):
        empirical_potential(m, 60, 300.0, 2e-6)


def test_linear_fit_exact():
    x = np.linspace(0, 10, 7)
    a, b, r2 = linear_fit(x, 3 * x - 2)
    assert (a, b, r2) == pytest.approx((3.0, -2.0, 1.0))


def test_zero_crossings_linear_interpolation():
    z = np.array([0.0, 1.0, 2.0, 3.0])
    u = np.array([-1.0, 1.0, 1.0, -3.0])
    assert zero_crossings(z, u) == pytest.approx([0.5, 2.25])


@pytest.mark.parametrize("lam", [50e-6, 139e-6])
def test_wavelength_from_synthetic_tail(lam):
    z = np.linspace(1e-6, 6 * lam, 4000)
    u = np.sin(2 * math.pi * z / lam + 0.3) / z**3
    step = z[1] - z[0]
    got = extract_oscillation_wavelength(np.column_stack([z, u]), lam)
    assert abs(got - lam) < step
    assert extract_oscillation_wavelength(np.column_stack([z, 17.0 * u]), lam) == got


def test_wavelength_needs_a_cycle():
    z = np.linspace(1e-6, 1e-4, 50)
    with pytest.raises(FitError, match="cycle"):
        extract_oscillation_wavelength(np.column_stack([z, -1 / z**3]), 1e-5)


@pytest.mark.slow
def test_high_temperature_period_follows_upward_line():
    from scipy import constants as sc

    from rydcp.atomic import AtomicState, transition_frequency
    from rydcp.config import load_stack
    from rydcp.cp import total_potential

    stack = load_stack("suspended-graphene").stack
    s = AtomicState(30, 0, 0.5)
    half = {
        k: math.pi * sc.c / abs(transition_frequency(s, AtomicState(k, 1, 0.5))) for k in (29, 30)
    }
    z = np.linspace(0.3e-3, 3e-3, 150)
    u = [total_potential(s, stack, zi, 300.0).total for zi in z]
    lam = extract_oscillation_wavelength(np.column_stack([z, u]), 2 * min(half.values()))
    assert abs(lam - half[30]) < abs(lam - half[29])


def test_gold_c3_matches_published_two_term_curve():
    from rydcp.atomic import AtomicState
    from rydcp.config import load_stack
    from rydcp.cp import total_potential

    gold = load_stack("gold-slab").stack
    z0 = 1e-5
    for n in range(20, 51, 5):
        c3 = -total_potential(AtomicState(n, 0, 0.5), gold, z0, 10.0).total * z0**3
        assert c3 == pytest.approx(1.936e-16 * n**4 - 1.893e-15 * n**3, rel=0.10)


def test_kubo_power_law_exponent_is_three():
    from rydcp.atomic import AtomicState
    from rydcp.config import load_stack
    from rydcp.cp import total_potential

    g = load_stack("suspended-graphene").stack
    z = np.geomspace(1e-6, 1e-5, 5)
    fit = fit_power_law([(zi, total_potential(AtomicState(30, 0, 0.5), g, zi, 10.0).total) for zi in z])
    assert fit.alpha == pytest.approx(3.0, abs=0.05)
