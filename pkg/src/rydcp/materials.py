"""Electromagnetic response of graphene sheets, metals and dielectrics.

Graphene is described either by the local Kubo conductivity or by a
wavevector-dependent conductivity built from the zero-temperature Lindhard
polarizability with a number-conserving relaxation-time correction.
Frequencies may be real (rad/s) or lie on the positive imaginary axis.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import constants as sc

from .quadrature import gauss_kronrod

__all__ = [
    "SIGMA0",
    "Dielectric",
    "DrudeMetal",
    "GrapheneParams",
    "KuboGraphene",
    "NonlocalGraphene",
    "classify_region",
    "drude_permittivity",
    "kubo_conductivity",
    "lindhard_polarizability",
    "lindhard_complex",
    "lindhard_regions",
    "rpa_rt_dielectric",
    "rpa_rt_polarizability",
    "static_polarizability",
    "nonlocal_conductivity",
]

SIGMA0 = sc.e**2 / (4 * sc.hbar)
GOLD_PLASMA = 1.35e16
GOLD_DAMPING = 17.13e12


@dataclass(frozen=True)
class GrapheneParams:
    """Doping, damping and temperature of a graphene sheet.

    ``fermi_energy`` is in eV (sign ignored), ``gamma`` in rad/s and
    ``temperature`` in K; ``None`` lets the sheet follow the environment.
    """

    fermi_energy: float = 0.1
    gamma: float = 4e12
    temperature: float | None = None
    fermi_velocity: float = 1e6

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.temperature is not None and self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if not self.fermi_velocity > 0:
            raise ValueError("fermi_velocity must be positive")

    @property
    def ef_joule(self) -> float:
        return abs(self.fermi_energy) * sc.e

    @property
    def k_fermi(self) -> float:
        return self.ef_joule / (sc.hbar * self.fermi_velocity)

    def sheet_temperature(self, env_temperature: float | None) -> float:
        if self.temperature is not None:
            return self.temperature
        if env_temperature is None:
            raise ValueError("sheet temperature follows the environment, but none was given")
        return env_temperature


# --------------------------------------------------------------------------
# Kubo conductivity
# --------------------------------------------------------------------------

def _occupation_g(X, ef, kT):
    """G(X) = sinh(X/kT) / (cosh(E_F/kT) + cosh(X/kT)), overflow-safe."""
    X = np.asarray(X, dtype=float)
    if kT == 0:
        return np.sign(X) * np.where(np.abs(X) > ef, 1.0, np.where(np.abs(X) == ef, 0.5, 0.0))
    a = np.abs(X) / kT
    b = ef / kT
    with np.errstate(over="ignore"):
        den = np.exp(b - a) + np.exp(-b - a) + 1.0 + np.exp(-2 * a)
    return np.sign(X) * (-np.expm1(-2 * a)) / den


def _effective_energy(ef, kT):
    if kT == 0:
        return ef
    return ef + 2 * kT * math.log1p(math.exp(-ef / kT))


def _intraband(omega: complex, ef, kT, gamma):
    return 4 * SIGMA0 / math.pi * _effective_energy(ef, kT) / (sc.hbar * gamma - 1j * sc.hbar * omega)


@functools.lru_cache(maxsize=4096)
def _interband_real(omega: float, ef: float, kT: float, rtol: float) -> complex:
    hw = sc.hbar * omega
    g_half = float(_occupation_g(hw / 2, ef, kT))
    U = max(2.0, (ef + 40 * kT) / hw + 1.0)
    pts = {0.0, 0.5, U}
    for e in (ef - kT, ef, ef + kT):
        u = e / hw
        if 0 < u < U:
            pts.add(u)
    edges = np.array(sorted(pts))

    def f(u):
        return (_occupation_g(u * hw, ef, kT) - g_half) / (1 - 4 * u * u)

    val, _ = gauss_kronrod(f, edges, rtol=rtol, atol=1e-8 * math.pi / 4, label="Kubo interband (real axis)")
    # beyond U, G = 1 up to exp(-40)
    tail = -(1 - g_half) * 0.25 * math.log((2 * U + 1) / (2 * U - 1))
    return SIGMA0 * (g_half + 1j * 4 / math.pi * (val + tail))


@functools.lru_cache(maxsize=4096)
def _interband_imag(xi: float, ef: float, kT: float, rtol: float) -> float:
    if xi == 0:
        return 0.0
    hx = sc.hbar * xi
    U = max(2.0, (ef + 40 * kT) / hx + 1.0)
    pts = {0.0, U}
    for e in (ef - kT, ef, ef + kT):
        u = e / hx
        if 0 < u < U:
            pts.add(u)
    edges = np.array(sorted(pts))

    def f(u):
        return _occupation_g(u * hx, ef, kT) / (1 + 4 * u * u)

    val, _ = gauss_kronrod(f, edges, rtol=rtol, atol=1e-8 * math.pi / 4, label="Kubo interband (imaginary axis)")
    tail = 0.5 * (math.pi / 2 - math.atan(2 * U))
    return SIGMA0 * 4 / math.pi * (val + tail)


def kubo_conductivity(omega, params: GrapheneParams, temperature: float | None = None, rtol: float = 1e-10):
    """Local sheet conductivity sigma_intra + sigma_inter in S.

    ``omega`` is real (rad/s, either sign) or purely imaginary; arrays are
    evaluated element-wise. ``temperature`` is the environment temperature,
    used when the sheet does not fix its own.
    """
    T = params.sheet_temperature(temperature)
    kT = sc.k * T
    ef = params.ef_joule
    w = np.asarray(omega, dtype=complex)
    out = np.empty(w.shape, dtype=complex)
    for idx, wi in np.ndenumerate(w):
        if wi.imag != 0 and wi.real != 0:
            raise ValueError("omega must be purely real or purely imaginary")
        if wi.imag > 0 or (wi.imag == 0 and wi.real == 0):
            xi = wi.imag
            out[idx] = _intraband(1j * xi, ef, kT, params.gamma) + _interband_imag(xi, ef, kT, rtol)
        elif wi.imag < 0:
            raise ValueError("imaginary frequencies must lie on the positive axis")
        else:
            wr = abs(wi.real)
            s = _intraband(wr, ef, kT, params.gamma) + _interband_real(wr, ef, kT, rtol)
            out[idx] = s if wi.real > 0 else np.conj(s)
    return out if out.ndim else complex(out)


# --------------------------------------------------------------------------
# Lindhard polarizability (T = 0)
# --------------------------------------------------------------------------

REGIONS = ("1A", "2A", "3A", "1B", "2B", "3B")


def _check_doped(params: GrapheneParams):
    if params.fermi_energy == 0:
        raise ValueError("the Lindhard model needs a non-zero Fermi energy")


def _xy(q, omega, params):
    _check_doped(params)
    x = np.asarray(q, dtype=float) / params.k_fermi
    y = sc.hbar * np.asarray(omega) / params.ef_joule
    return x, y


def classify_region(x, y) -> np.ndarray:
    """Region label of each (x = q/k_F, y = hbar omega/E_F) point.

    Points exactly on y = x are put in the B family; other boundary points
    go to the region on their upper side in y.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    out = np.empty(x.shape, dtype="<U2")
    a = y < x
    out[a & (x + y < 2)] = "1A"
    out[a & (x + y >= 2) & (x - y <= 2)] = "2A"
    out[a & (x - y > 2)] = "3A"
    b = ~a
    out[b & (x + y < 2)] = "1B"
    out[b & (x + y >= 2) & (y < x + 2)] = "2B"
    out[b & (y >= x + 2)] = "3B"
    return out


# arguments can leave the domain by an ulp on region boundaries; clip them back
def _ch(a):
    a = np.maximum(a, 1.0)
    return a * np.sqrt(a * a - 1) - np.arccosh(a)


def _c(a):
    a = np.clip(a, -1.0, 1.0)
    return a * np.sqrt(1 - a * a) - np.arccos(a)


def lindhard_regions(x, y) -> np.ndarray:
    """P / t1 on the real frequency axis from the six closed-form regions."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    reg = classify_region(x, y)
    out = np.full(x.shape, np.nan, dtype=complex)
    with np.errstate(all="ignore"):
        t2 = x * x / np.sqrt(y * y - x * x)
        t3 = x * x / np.sqrt(x * x - y * y)
        t4 = (2 + y) / x
        t5 = (2 - y) / x
        t6 = (y - 2) / x
        m = reg == "1A"
        out[m] = -2 + 0.25j * t3[m] * (_ch(t5[m]) - _ch(t4[m]))
        m = reg == "2A"
        out[m] = -2 + 0.25 * t3[m] * _c(t5[m]) - 0.25j * t3[m] * _ch(t4[m])
        m = reg == "3A"
        # the closed form needs the -pi branch offset to join 2A continuously
        out[m] = -2 + 0.25 * t3[m] * (_c(t4[m]) - _c(t6[m]) - np.pi)
        m = reg == "1B"
        out[m] = -2 + 0.25 * t2[m] * (_ch(t4[m]) - _ch(t5[m]))
        m = reg == "2B"
        out[m] = -2 + 0.25 * t2[m] * _ch(t4[m]) + 0.25j * t2[m] * _c(t5[m])
        m = reg == "3B"
        out[m] = -2 + 0.25 * t2[m] * (_ch(t4[m]) - _ch(t6[m])) - 0.25j * np.pi * t2[m]
    return out


def _psi(z):
    # G(z) - z^2 with G(z) = z s - arccosh z, written without cancellation
    s = np.sqrt(z - 1) * np.sqrt(z + 1)
    zs = z + s
    return -z / zs - np.log(zs)


def lindhard_complex(x, y) -> np.ndarray:
    """P / t1 for complex y with Im y > 0 (retarded continuation).

    Uses P = -2 t1 + (i/4) t1 x^2/S [G((2-y)/x) - G((2+y)/x)] with
    S = sqrt(x^2 - y^2), regrouped so the q -> 0 limit stays accurate.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=complex)
    x, y = np.broadcast_arrays(x, y)
    S = np.sqrt(x * x - y * y)
    t4 = (2 + y) / x
    t5 = (2 - y) / x
    return (x * x / S) * (-2 / (S - 1j * y) + 0.25j * (_psi(t5) - _psi(t4)))


def _t1(params):
    return params.k_fermi / (math.pi * sc.hbar * params.fermi_velocity)


def static_polarizability(q, params: GrapheneParams) -> np.ndarray:
    """P(q, 0) in 1/(J m^2)."""
    _check_doped(params)
    x = np.asarray(q, dtype=float) / params.k_fermi
    out = np.full(x.shape, -2.0)
    big = x > 2
    if np.any(big):
        xb = x[big]
        out[big] = -2 + 0.25 * xb * (_c(2 / xb) - _c(-2 / xb) - np.pi)
    return _t1(params) * out


def lindhard_polarizability(q, omega, params: GrapheneParams) -> np.ndarray:
    """Zero-temperature P(q, omega) in 1/(J m^2).

    Real ``omega`` uses the region formulas (boundary value from above);
    complex ``omega`` with positive imaginary part uses the continuation.
    """
    _check_doped(params)
    w = np.asarray(omega)
    x = np.asarray(q, dtype=float) / params.k_fermi
    if np.any(x <= 0):
        raise ValueError("q must be positive")
    y = sc.hbar * w / params.ef_joule
    if np.iscomplexobj(y) and np.any(np.imag(y) != 0):
        if np.any(np.imag(y) < 0):
            raise ValueError("complex omega must lie in the upper half plane")
        return _t1(params) * lindhard_complex(x, y)
    y = np.real(y)
    if np.any(y < 0):
        raise ValueError("omega must be non-negative")
    return _t1(params) * lindhard_regions(x, y)


def rpa_rt_polarizability(q, omega, params: GrapheneParams) -> np.ndarray:
    """Relaxation-time (number-conserving) polarizability P_gamma(q, omega).

    P_g = (w + i g) P(q, w + i g) / (w + i g P(q, w + i g) / P(q, 0)).
    ``omega`` may be real or on the positive imaginary axis.
    """
    w = np.asarray(omega, dtype=complex)
    g = params.gamma
    pw = lindhard_polarizability(q, w + 1j * g, params)
    p0 = static_polarizability(q, params)
    return (w + 1j * g) * pw / (w + 1j * g * pw / p0)


def nonlocal_conductivity(q, omega, params: GrapheneParams) -> np.ndarray:
    """Longitudinal sheet conductivity i e^2 omega P_gamma / q^2 in S."""
    q = np.asarray(q, dtype=float)
    w = np.asarray(omega, dtype=complex)
    return 1j * sc.e**2 * w * rpa_rt_polarizability(q, w, params) / (q * q)


def rpa_rt_dielectric(q, omega, params: GrapheneParams, eps_r: float = 1.0) -> np.ndarray:
    """eps_r - v_q P_gamma with v_q = e^2 / (2 eps0 q)."""
    q = np.asarray(q, dtype=float)
    return eps_r - sc.e**2 / (2 * sc.epsilon_0 * q) * rpa_rt_polarizability(q, omega, params)


# --------------------------------------------------------------------------
# bulk media
# --------------------------------------------------------------------------

def drude_permittivity(omega, omega_p: float = GOLD_PLASMA, gamma_d: float = GOLD_DAMPING):
    """eps = 1 - omega_p^2 / (omega^2 + i Gamma omega)."""
    w = np.asarray(omega, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 1 - omega_p**2 / (w * w + 1j * gamma_d * w)
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class KuboGraphene:
    params: GrapheneParams = GrapheneParams()
    kind = "kubo"
    is_sheet = True
    nonlocal_ = False

    def sigma(self, omega, q=None, temperature=None):
        return kubo_conductivity(omega, self.params, temperature)


@dataclass(frozen=True)
class NonlocalGraphene:
    params: GrapheneParams = GrapheneParams()
    kind = "nonlocal"
    is_sheet = True
    nonlocal_ = True

    def sigma(self, omega, q=None, temperature=None):
        if q is None:
            raise ValueError("the non-local conductivity needs q")
        return nonlocal_conductivity(q, omega, self.params)


@dataclass(frozen=True)
class DrudeMetal:
    omega_p: float = GOLD_PLASMA
    gamma_d: float = GOLD_DAMPING
    kind = "drude"
    is_sheet = False

    def __post_init__(self):
        if self.omega_p <= 0 or self.gamma_d < 0:
            raise ValueError("Drude parameters must be positive")

    def epsilon(self, omega):
        return drude_permittivity(omega, self.omega_p, self.gamma_d)


@dataclass(frozen=True)
class Dielectric:
    eps_r: float = 1.0
    kind = "dielectric"
    is_sheet = False

    def __post_init__(self):
        if self.eps_r < 1:
            raise ValueError("eps_r must be >= 1")

    def epsilon(self, omega):
        w = np.asarray(omega)
        out = np.full(w.shape, complex(self.eps_r))
        return out if out.ndim else complex(out)


SheetModel = Union[KuboGraphene, NonlocalGraphene]
BulkModel = Union[DrudeMetal, Dielectric]
MaterialModel = Union[KuboGraphene, NonlocalGraphene, DrudeMetal, Dielectric]
