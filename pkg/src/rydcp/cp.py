"""Thermal Casimir-Polder potential of an atom above a planar stack.

The potential is the sum of a non-resonant Matsubara sum over imaginary
frequencies and a resonant term evaluated at the atomic transition
frequencies, itself split into evanescent and propagating parts.
Energies are returned as U/h in Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants as sc

from .atomic import (
    AtomicState,
    BasisWindow,
    polarizability_imag_diag,
    thermal_photon_number,
    transition_frequency,
    transitions,
)
from .em import green_scattering_matsubara, green_scattering_real

__all__ = [
    "CPBreakdown",
    "MatsubaraError",
    "RegimeReport",
    "TransitionTerm",
    "mixed_state_potential",
    "nonresonant_potential",
    "regime_report",
    "resonant_potential",
    "total_potential",
]

MAX_MATSUBARA = 100_000
REGIME_MARGIN = 2.0  # "a << b" is read as a < b / REGIME_MARGIN


class MatsubaraError(RuntimeError):
    """The Matsubara sum did not settle within the term cap."""


@dataclass(frozen=True)
class TransitionTerm:
    """Resonant contribution through one intermediate level."""

    level: AtomicState
    omega: float  # omega_ku, rad/s, signed
    evanescent: float  # Hz
    propagating: float  # Hz
    share: float = 0.0  # R^res, signed by the term

    @property
    def value(self) -> float:
        return self.evanescent + self.propagating


@dataclass(frozen=True)
class CPBreakdown:
    state: AtomicState
    z0: float
    temperature: float
    u_nres: float
    u_res_evan: float
    u_res_prop: float
    per_transition: tuple = field(default=(), repr=False)
    matsubara_terms: int = 0

    @property
    def u_res(self) -> float:
        return self.u_res_evan + self.u_res_prop

    @property
    def total(self) -> float:
        return self.u_nres + self.u_res_evan + self.u_res_prop

    def shares(self) -> dict:
        """R^res keyed by intermediate-level label."""
        return {t.level.label: t.share for t in self.per_transition}


def _hz(joule: float) -> float:
    return joule / sc.h


def nonresonant_potential(
    state: AtomicState,
    stack,
    z0: float,
    temperature: float,
    tol: float = 1e-8,
    window: BasisWindow | None = None,
    green_rtol: float = 1e-9,
    return_terms: bool = False,
):
    """(kT/eps0) sum'_j alpha(i xi_j) . xi_j^2 G(i xi_j)/c^2, in Hz.

    The j = 0 term has half weight. Summation stops once five consecutive
    terms are each below ``tol`` times the running total.
    """
    if not temperature > 0:
        raise ValueError("the Matsubara sum needs T > 0")
    if stack.is_vacuum:
        return (0.0, 0) if return_terms else 0.0
    ts = transitions(state, window)
    xi1 = 2 * math.pi * sc.k * temperature / sc.hbar
    pref = sc.k * temperature / sc.epsilon_0
    total = 0.0
    small = 0
    j = 0
    while True:
        xi = j * xi1
        h = green_scattering_matsubara(stack, z0, xi, temperature, green_rtol).h_diagonal()
        alpha = polarizability_imag_diag(ts, xi)
        term = pref * float(np.dot(alpha, h)) * (0.5 if j == 0 else 1.0)
        total += term
        j += 1
        if j > 1 and abs(term) < tol * abs(total):
            small += 1
        else:
            small = 0
        if small >= 5 or (total == 0 and j > 5):
            break
        if j >= MAX_MATSUBARA:
            raise MatsubaraError(
                f"{state.label}: Matsubara sum not settled after {j} terms "
                f"(last {term:.3e} J, total {total:.3e} J, z0={z0:g} m, T={temperature:g} K)"
            )
    return (_hz(total), j) if return_terms else _hz(total)


def resonant_potential(
    state: AtomicState,
    stack,
    z0: float,
    temperature: float,
    window: BasisWindow | None = None,
    green_rtol: float = 1e-9,
):
    """Resonant term split as (evanescent Hz, propagating Hz, [TransitionTerm])."""
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    ts = transitions(state, window)
    terms = []
    for level, w, s in zip(ts.level_states(), ts.omega, ts.strengths):
        aw = abs(float(w))
        if w < 0:
            weight = -(thermal_photon_number(aw, temperature) + 1.0)
        else:
            weight = thermal_photon_number(aw, temperature)
        if weight == 0 or stack.is_vacuum or not np.any(s):
            terms.append(TransitionTerm(level, float(w), 0.0, 0.0))
            continue
        ev, pr = green_scattering_real(stack, z0, aw, temperature, green_rtol)
        pref = sc.mu_0 * weight * aw * aw
        e = pref * float(np.dot(s, np.real(ev.diagonal())))
        p = pref * float(np.dot(s, np.real(pr.diagonal())))
        terms.append(TransitionTerm(level, float(w), _hz(e), _hz(p)))
    norm = sum(abs(t.value) for t in terms)
    if norm > 0:
        terms = [
            TransitionTerm(t.level, t.omega, t.evanescent, t.propagating, t.value / norm) for t in terms
        ]
    evan = math.fsum(t.evanescent for t in terms)
    prop = math.fsum(t.propagating for t in terms)
    return evan, prop, terms


def total_potential(
    state: AtomicState,
    stack,
    z0: float,
    temperature: float,
    tol: float = 1e-8,
    window: BasisWindow | None = None,
    green_rtol: float = 1e-9,
) -> CPBreakdown:
    """Full breakdown U = U_nres + U_res,evan + U_res,prop (Hz)."""
    if not z0 > 0:
        raise ValueError("z0 must be positive")
    nres, nterms = nonresonant_potential(state, stack, z0, temperature, tol, window, green_rtol, return_terms=True)
    evan, prop, terms = resonant_potential(state, stack, z0, temperature, window, green_rtol)
    return CPBreakdown(state, z0, temperature, nres, evan, prop, tuple(terms), nterms)


def mixed_state_potential(weights, stack, z0: float, temperature: float, **kw) -> float:
    """Probability-weighted total potential of an incoherent mixture (Hz)."""
    weights = list(weights)
    if not weights:
        raise ValueError("empty mixture")
    probs = [float(p) for _, p in weights]
    if any(p < 0 for p in probs) or abs(math.fsum(probs) - 1) > 1e-12:
        raise ValueError(f"probabilities must be non-negative and sum to 1, got {probs}")
    return math.fsum(p * total_potential(s, stack, z0, temperature, **kw).total for (s, _), p in zip(weights, probs))


@dataclass(frozen=True)
class RegimeReport:
    """Characteristic lengths and temperatures, with the limiting-case flags.

    ``z_omega`` and ``t_omega`` use the largest dominant transition
    frequency; the ``_minus`` variants use the smallest.
    """

    omega_minus: float
    omega_plus: float
    z_omega: float
    z_omega_minus: float
    z_T: float
    T_z: float
    t_omega: float
    t_omega_minus: float
    retarded: bool
    non_retarded: bool
    spectroscopic_low_t: bool
    spectroscopic_high_t: bool
    geometric_low_t: bool
    geometric_high_t: bool

    @property
    def intermediate(self) -> bool:
        """True when some pair of limits is undecided."""
        return not (
            (self.retarded or self.non_retarded)
            and (self.spectroscopic_low_t or self.spectroscopic_high_t)
            and (self.geometric_low_t or self.geometric_high_t)
        )

    def flags(self) -> dict:
        return {
            "retarded": self.retarded,
            "non-retarded": self.non_retarded,
            "spectroscopic-low-T": self.spectroscopic_low_t,
            "spectroscopic-high-T": self.spectroscopic_high_t,
            "geometric-low-T": self.geometric_low_t,
            "geometric-high-T": self.geometric_high_t,
            "intermediate": self.intermediate,
        }


def dominant_frequencies(state: AtomicState) -> tuple[float, float]:
    """(omega_-, omega_+) over the nS -> (n-1)P and nS -> nP fine-structure lines."""
    ws = []
    for n_p in (state.n - 1, state.n):
        for lp in (state.l - 1, state.l + 1):
            if lp < 0 or n_p <= lp:
                continue
            for jp in (lp - 0.5, lp + 0.5):
                if jp < 0.5 or abs(jp - state.j) > 1:
                    continue
                ws.append(abs(transition_frequency(state, AtomicState(n_p, lp, jp))))
    if not ws:
        raise ValueError(f"{state.label}: no dominant transitions found")
    return min(ws), max(ws)


def regime_report(state: AtomicState, z0: float, temperature: float, margin: float = REGIME_MARGIN) -> RegimeReport:
    """Characteristic quantities and limit flags for (state, z0, T)."""
    if not z0 > 0:
        raise ValueError("z0 must be positive")
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    wm, wp = dominant_frequencies(state)
    c, hb, kb = sc.c, sc.hbar, sc.k
    kT = kb * temperature
    return RegimeReport(
        omega_minus=wm,
        omega_plus=wp,
        z_omega=c / wp,
        z_omega_minus=c / wm,
        z_T=hb * c / kT if kT > 0 else math.inf,
        T_z=hb * c / (z0 * kb),
        t_omega=hb * wp / kb,
        t_omega_minus=hb * wm / kb,
        retarded=z0 * wm / c > margin,
        non_retarded=z0 * wp / c < 1 / margin,
        spectroscopic_low_t=kT < hb * wm / margin,
        spectroscopic_high_t=kT > margin * hb * wp,
        geometric_low_t=kT < hb * c / z0 / margin,
        geometric_high_t=kT > margin * hb * c / z0,
    )
