import math

import numpy as np
import pytest
import sympy.physics.wigner as sw
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import constants as sc

from rydcp.atomic import (
    AtomicState,
    BasisWindow,
    TransitionSet,
    binding_energy,
    dipole_element,
    effective_n,
    load_atom_data,
    polarizability,
    polarizability_imag_diag,
    quantum_defect,
    radial_matrix_element,
    radial_wavefunction,
    thermal_photon_number,
    transition_frequency,
    transitions,
    wigner_3j,
)

def test_defects_from_table():
    assert quantum_defect(0, 0.5, 10**9) == pytest.approx(3.1311804, abs=1e-9)
    assert quantum_defect(3, 2.5, 20) == 0.0
    assert quantum_defect(1, 1.5, 30) == pytest.approx(2.6416737 + 0.2950 / (30 - 0.2950) ** 2, rel=1e-12)


def test_binding_energy_forms():
    d = load_atom_data()
    e = binding_energy(AtomicState(30, 0, 0.5))
    assert e == pytest.approx(-d.rydberg_energy / effective_n(AtomicState(30, 0, 0.5)) ** 2, rel=1e-14)
    assert effective_n(AtomicState(30, 0, 0.5)) == pytest.approx(30 - 3.1313, abs=2e-4)
    # hydrogenic series with no defect
    assert binding_energy(AtomicState(20, 4, 4.5)) == pytest.approx(-d.rydberg_energy / 400, rel=1e-14)
    ratio = binding_energy(AtomicState(20, 0, 0.5)) / binding_energy(AtomicState(40, 0, 0.5))
    n20, n40 = effective_n(AtomicState(20, 0, 0.5)), effective_n(AtomicState(40, 0, 0.5))
    assert ratio == pytest.approx((n40 / n20) ** 2, rel=1e-14)


def test_reduced_mass_rydberg():
    d = load_atom_data()
    mu = 1 / (1 + sc.m_e / (d.mass_u * sc.atomic_mass))
    assert d.rydberg_energy == pytest.approx(sc.Rydberg * sc.h * sc.c * mu, rel=1e-12)


def test_energy_ordering():
    for n in (10, 30, 60):
        s, p, dd = (binding_energy(AtomicState(n, l, l + 0.5)) for l in (0, 1, 2))
        assert s < p < dd
    es = [binding_energy(AtomicState(n, 1, 0.5)) for n in range(5, 80)]
    assert np.all(np.diff(es) > 0)


def test_transition_frequencies():
    u = AtomicState(30, 0, 0.5)
    assert transition_frequency(u, u) == 0.0
    w = transition_frequency(u, AtomicState(30, 1, 0.5))
    assert w == pytest.approx(9.88e11, rel=0.01)
    assert transition_frequency(AtomicState(30, 1, 0.5), u) == -w
    # 6S -> 5P1/2 is near 1.36 um; the defects here put it at 1.47 um
    lam = 2 * math.pi * sc.c / abs(transition_frequency(AtomicState(6, 0, 0.5), AtomicState(5, 1, 0.5)))
    assert lam == pytest.approx(1.36e-6, rel=0.10)


@pytest.mark.parametrize("n,l,j", [(5, 0, 0.5), (30, 0, 0.5), (30, 1, 1.5), (45, 2, 2.5), (20, 3, 3.5), (80, 0, 0.5)])
def test_wavefunction_nodes_and_norm(n, l, j):
    wf = radial_wavefunction(AtomicState(n, l, j))
    assert wf.node_count() == n - l - 1
    assert wf.norm() == pytest.approx(1.0, abs=1e-6)


def test_mean_radius_oracle():
    s = AtomicState(30, 0, 0.5)
    coarse = radial_wavefunction(s).expectation_r()
    fine = radial_wavefunction(s, step=0.005 / 4).expectation_r()
    assert coarse == pytest.approx(fine, rel=1e-6)
    ns = effective_n(s)
    assert coarse == pytest.approx(1.5 * ns**2, rel=0.02)


def test_radial_dipole_oracle_and_scaling():
    u, k = AtomicState(30, 0, 0.5), AtomicState(30, 1, 1.5)
    assert radial_matrix_element(u, k) == pytest.approx(radial_matrix_element(u, k, step=0.005 / 4), rel=1e-6)
    ns = np.arange(20, 51, 5)
    r = [abs(radial_matrix_element(AtomicState(n, 0, 0.5), AtomicState(n, 1, 1.5))) for n in ns]
    ratio = np.array(r) / np.array([effective_n(AtomicState(n, 0, 0.5)) ** 2 for n in ns])
    assert np.ptp(ratio) / ratio.mean() < 0.05
    slope = np.polyfit(np.log(ns), np.log(r), 1)[0]
    assert 1.8 <= slope <= 2.2


def test_selection_rules():
    u = AtomicState(30, 0, 0.5)
    assert not np.any(dipole_element(u, AtomicState(30, 2, 2.5, 0.5)).cartesian)
    assert not np.any(dipole_element(u, AtomicState(31, 0, 0.5)).cartesian)
    assert not np.any(dipole_element(u, AtomicState(30, 1, 1.5, 1.5).with_m(-1.5)).cartesian)


@settings(max_examples=60, deadline=None)
@given(
    tj1=st.integers(0, 8),
    tj2=st.integers(0, 8),
    tj3=st.integers(0, 8),
    tm1=st.integers(-8, 8),
    tm2=st.integers(-8, 8),
)
def test_wigner_3j_matches_sympy(tj1, tj2, tj3, tm1, tm2):
    tm3 = -tm1 - tm2
    ok = all((tj + tm) % 2 == 0 and abs(tm) <= tj for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)))
    if not ok:
        return
    from sympy import Rational

    ref = float(sw.wigner_3j(*(Rational(x, 2) for x in (tj1, tj2, tj3, tm1, tm2, tm3))))
    assert wigner_3j(tj1 / 2, tj2 / 2, tj3 / 2, tm1 / 2, tm2 / 2, tm3 / 2) == pytest.approx(ref, abs=1e-12)


def test_polarizability_properties():
    u = AtomicState(30, 0, 0.5)
    a0 = polarizability(u, 0.0)
    assert np.allclose(a0, np.diag([a0[0, 0]] * 3), rtol=1e-10, atol=0)
    assert a0[0, 0].real > 0
    xi = np.array([1e12, 1e14, 1e16])
    a = polarizability(u, 1j * xi)
    ts = transitions(u)
    assert np.allclose(np.real(np.diagonal(a, axis1=1, axis2=2)), polarizability_imag_diag(ts, xi), rtol=1e-10)
    # 1/xi^2 decay
    hi = polarizability_imag_diag(ts, np.array([1e17, 2e17]))[:, 0]
    assert hi[0] / hi[1] == pytest.approx(4.0, rel=1e-3)
    w = 3e11
    ap = polarizability(u, w)
    assert np.allclose(ap, ap.T, rtol=1e-10)
    assert np.allclose(polarizability(u, -w), np.conj(ap), rtol=1e-9)


def test_polarizability_zero_damping_pole():
    u = AtomicState(30, 0, 0.5)
    w = abs(transitions(u).omega[0])
    with pytest.raises(ZeroDivisionError):
        polarizability(u, w, damping=0.0)


def test_two_level_oracle():
    u = AtomicState(30, 0, 0.5)
    ts = transitions(u)
    one = TransitionSet(u, ts.levels[:1], ts.omega[:1], ts.tensor[:1])
    w, wk = 2.5e11, ts.omega[0]
    d2 = ts.tensor[0]
    closed = (d2 / (wk - w) + d2.T / (wk + w)) / sc.hbar
    assert np.allclose(polarizability(u, w, damping=0.0, tset=one), closed, rtol=1e-12)


def test_polarizability_n7_scaling():
    ns = np.arange(20, 51, 5)
    a = [polarizability(AtomicState(n, 0, 0.5), 0.0)[0, 0].real for n in ns]
    slope = np.polyfit(np.log(ns), np.log(a), 1)[0]
    assert 6.5 <= slope <= 7.5
    # transition frequencies follow n*^-3; against bare n the defect steepens the slope
    w = [abs(transition_frequency(AtomicState(n, 0, 0.5), AtomicState(n - 1, 1, 1.5))) for n in ns]
    nstar = [effective_n(AtomicState(n, 0, 0.5)) for n in ns]
    assert -3.3 <= np.polyfit(np.log(nstar), np.log(w), 1)[0] <= -2.7


def test_basis_window_doubling_is_converged():
    u = AtomicState(30, 0, 0.5)
    a15 = polarizability(u, 0.0)[0, 0].real
    a30 = polarizability(u, 0.0, window=BasisWindow(30))[0, 0].real
    assert a30 == pytest.approx(a15, rel=1e-3)


def test_thermal_photon_number():
    T = 10.0
    w = math.log(2) * sc.k * T / sc.hbar
    assert thermal_photon_number(w, T) == pytest.approx(1.0, rel=1e-14)
    assert thermal_photon_number(1e12, 0.0) == 0.0
    assert thermal_photon_number(9.88e11, 300.0) == pytest.approx(39.3, abs=0.1)
    assert thermal_photon_number(1e9, 300.0) == pytest.approx(sc.k * 300 / (sc.hbar * 1e9), rel=1e-3)


def test_state_validation():
    with pytest.raises(ValueError):
        AtomicState(3, 3, 3.5)
    with pytest.raises(ValueError):
        AtomicState(5, 1, 2.5)
    with pytest.raises(ValueError):
        AtomicState(5, 0, 0.5, 1.5)


def test_data_dir_override(tmp_path, monkeypatch):
    import shutil
    from importlib import resources

    src = resources.files("rydcp") / "data" / "rb87.yaml"
    text = src.read_text().replace("3.1311804", "3.2")
    (tmp_path / "rb87.yaml").write_text(text)
    d = load_atom_data(tmp_path / "rb87.yaml")
    assert quantum_defect(0, 0.5, 10**9, d) == pytest.approx(3.2)
