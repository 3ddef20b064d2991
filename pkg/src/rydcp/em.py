"""Planar multilayers: reflection coefficients and the equal-point
scattering Green's tensor above the stack.

Interfaces may carry a conducting sheet. Reflection is computed with an
admittance (transmission-line) recursion in which a sheet is a shunt
admittance sigma; that is the same as the tangential-H jump condition.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import constants as sc

from .materials import Dielectric, DrudeMetal, KuboGraphene, NonlocalGraphene
from .quadrature import gauss_kronrod, oscillatory_edges

__all__ = [
    "BranchError",
    "Layer",
    "LayerStack",
    "PerfectMirror",
    "ScatteringGreenDiagonal",
    "green_scattering_matsubara",
    "green_scattering_real",
    "reflection_coefficients",
    "XI_STATIC",
    "VACUUM",
]

C = sc.c
XI_STATIC = 1e-3  # rad/s; stands in for xi = 0 in reflection coefficients


class BranchError(RuntimeError):
    """A reflection coefficient on the imaginary axis exceeded unit modulus."""


@dataclass(frozen=True)
class Layer:
    """A homogeneous slab; ``thickness`` is ``math.inf`` for the half-spaces."""

    material: Union[DrudeMetal, Dielectric]
    thickness: float = math.inf
    mu: float = 1.0

    def __post_init__(self):
        if not self.thickness > 0:
            raise ValueError(f"layer thickness must be positive, got {self.thickness}")
        if self.mu <= 0:
            raise ValueError("permeability must be positive")


VACUUM = Layer(Dielectric(1.0))
Sheet = Optional[Union[KuboGraphene, NonlocalGraphene]]


@dataclass(frozen=True)
class LayerStack:
    """Layers ordered from the atom side downward, plus one sheet slot per interface.

    ``sheets[i]`` sits between ``layers[i]`` and ``layers[i + 1]``.
    """

    layers: tuple
    sheets: tuple = ()
    name: str = ""

    def __post_init__(self):
        layers = tuple(self.layers)
        sheets = tuple(self.sheets) if self.sheets else (None,) * (len(layers) - 1)
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "sheets", sheets)
        if len(layers) < 2:
            raise ValueError("a stack needs at least two layers")
        top = layers[0]
        if not (isinstance(top.material, Dielectric) and top.material.eps_r == 1 and top.mu == 1):
            raise ValueError("the first layer must be vacuum")
        if not (math.isinf(top.thickness) and math.isinf(layers[-1].thickness)):
            raise ValueError("the outermost layers must be semi-infinite")
        if any(math.isinf(l.thickness) for l in layers[1:-1]):
            raise ValueError("inner layers must have finite thickness")
        if len(sheets) != len(layers) - 1:
            raise ValueError(f"expected {len(layers) - 1} sheet entries, got {len(sheets)}")

    @property
    def is_vacuum(self) -> bool:
        return all(s is None for s in self.sheets) and all(
            isinstance(l.material, Dielectric) and l.material.eps_r == 1 and l.mu == 1 for l in self.layers
        )

    @property
    def has_nonlocal(self) -> bool:
        return any(isinstance(s, NonlocalGraphene) for s in self.sheets)

    def reflection(self, k_par, omega, temperature=None):
        return reflection_coefficients(self, k_par, omega, temperature)

    def hints(self, omega, temperature=None) -> list[float]:
        """Characteristic in-plane wavenumbers (1/m) where r may vary sharply."""
        w = complex(omega)
        k0 = abs(w) / C
        out = []
        for layer in self.layers[1:]:
            eps = complex(layer.material.epsilon(w))
            n2 = (eps * layer.mu).real
            if n2 > 1 and math.isfinite(n2):
                out.append(math.sqrt(n2) * k0)
        for s in self.sheets:
            if isinstance(s, KuboGraphene):
                sig = complex(s.sigma(w, temperature=temperature))
                if w.imag == 0 and sig.imag > 0:
                    # sheet plasmon of a free-standing layer
                    out.append(2 * sc.epsilon_0 * abs(w) * sig.imag / abs(sig) ** 2)
            elif isinstance(s, NonlocalGraphene):
                out.append(s.params.k_fermi * 1e-2)
                out.append(s.params.k_fermi)
                out.append(2 * s.params.k_fermi)
        return [h for h in out if math.isfinite(h) and h > 0]


@dataclass(frozen=True)
class PerfectMirror:
    """Idealised conductor with r_s = -1 and r_p = +1 at every k and frequency."""

    name: str = "perfect-mirror"
    is_vacuum = False
    has_nonlocal = False

    def reflection(self, k_par, omega, temperature=None):
        k = np.asarray(k_par, dtype=float)
        return -np.ones(k.shape, dtype=complex), np.ones(k.shape, dtype=complex)

    def hints(self, omega, temperature=None):
        return []


def _kz(eps_mu, omega, k2):
    kz = np.sqrt(eps_mu * omega * omega / C**2 - k2 + 0j)
    # radiation condition: Im kz >= 0, and Re kz >= 0 on the real axis
    flip = (kz.imag < 0) | ((kz.imag == 0) & (kz.real < 0))
    return np.where(flip, -kz, kz)


def reflection_coefficients(stack, k_par, omega, temperature=None, kz_vacuum=None):
    """Generalised (r_s, r_p) of the stack seen from the vacuum half-space.

    ``omega`` is real positive or on the positive imaginary axis;
    ``k_par`` may be an array. ``kz_vacuum``, if given, is the normal
    wavenumber in vacuum matching ``k_par``; passing it avoids losing it to
    rounding near grazing incidence.
    """
    if isinstance(stack, PerfectMirror):
        return stack.reflection(k_par, omega, temperature)
    k = np.asarray(k_par, dtype=float)
    if np.any(k < 0):
        raise ValueError("k_par must be non-negative")
    w = complex(omega)
    if w.imag < 0 or (w.imag != 0 and w.real != 0) or w == 0:
        raise ValueError("omega must be real positive or positive imaginary")
    k2 = k * k
    layers = stack.layers
    kz, eps = [], []
    for layer in layers:
        e = complex(layer.material.epsilon(w))
        eps.append(e)
        if kz_vacuum is not None and e * layer.mu == 1:
            kz.append(np.asarray(kz_vacuum, dtype=complex) * np.ones(k.shape))
        else:
            kz.append(_kz(e * layer.mu, w, k2))
    out = []
    sig_cache = {}
    for pol in ("s", "p"):
        Y = [
            (sc.epsilon_0 * eps[i] * w / kz[i]) if pol == "p" else (kz[i] / (sc.mu_0 * layers[i].mu * w))
            for i in range(len(layers))
        ]
        y_in = Y[-1]
        gamma = None
        for i in range(len(layers) - 2, -1, -1):
            sheet = stack.sheets[i]
            y_load = y_in
            if sheet is not None:
                if i not in sig_cache:
                    sig_cache[i] = sheet.sigma(w, q=np.maximum(k, 1e-300), temperature=temperature)
                y_load = y_load + sig_cache[i]
            gamma = (Y[i] - y_load) / (Y[i] + y_load)
            if i > 0:
                ph = np.exp(2j * kz[i] * layers[i].thickness)
                y_in = Y[i] * (1 - gamma * ph) / (1 + gamma * ph)
        out.append(gamma if pol == "s" else -gamma)
    r_s, r_p = (np.asarray(o) * np.ones(k.shape) for o in out)
    if w.real == 0:
        bad = (np.abs(r_s) > 1 + 1e-9) | (np.abs(r_p) > 1 + 1e-9)
        if np.any(bad):
            i = int(np.argmax(bad))
            raise BranchError(
                f"|r| > 1 on the imaginary axis at k={k.ravel()[i]:.4g} 1/m, xi={w.imag:.4g} rad/s: "
                f"r_s={r_s.ravel()[i]:.6g}, r_p={r_p.ravel()[i]:.6g}"
            )
    return r_s, r_p


@dataclass(frozen=True)
class ScatteringGreenDiagonal:
    """Diagonal of G^(s)(r0, r0) in 1/m; xx = yy by symmetry.

    For the imaginary axis ``h_xx``/``h_zz`` hold xi^2 G / c^2 (1/m^3),
    which stays finite at xi = 0.
    """

    g_xx: complex
    g_zz: complex
    frequency: complex
    z0: float
    part: str
    h_xx: float = float("nan")
    h_zz: float = float("nan")

    @property
    def g_yy(self) -> complex:
        return self.g_xx

    def diagonal(self) -> np.ndarray:
        return np.array([self.g_xx, self.g_xx, self.g_zz])

    def h_diagonal(self) -> np.ndarray:
        return np.array([self.h_xx, self.h_xx, self.h_zz])


def _edges(lo, hi, hints, z0):
    # geometric panels so narrow features at small k are sampled
    pts = [lo, hi]
    start = max(lo, 1e-3 / z0)
    if hi > start * 1.01:
        pts += list(np.geomspace(start, hi, 40))
    for h in hints:
        for f in (0.7, 0.9, 0.97, 1.0, 1.03, 1.1, 1.4):
            pts.append(h * f)
    pts = np.unique([p for p in pts if lo <= p <= hi])
    return pts


@functools.lru_cache(maxsize=65536)
def _green_real_cached(stack, z0, omega, temperature, rtol):
    k0 = omega / C
    hints = stack.hints(omega, temperature)
    kmax = max(40.0 / (2 * z0), 10 * k0)

    # evanescent: kappa in [0, kmax], k_par = sqrt(kappa^2 + k0^2)
    hint_k = [math.sqrt(max(h * h - k0 * k0, 0.0)) for h in hints if h > k0]

    def evan(kappa):
        kp = np.sqrt(kappa * kappa + k0 * k0)
        rs, rp = reflection_coefficients(stack, kp, omega, temperature, 1j * kappa)
        e = np.exp(-2 * kappa * z0) / (8 * math.pi)
        a = (kappa / k0) ** 2
        return np.stack([e * (rs + a * rp), e * 2 * (a + 1) * rp], axis=-1)

    ev, _ = gauss_kronrod(evan, _edges(0.0, kmax, hint_k, z0), rtol=rtol, atol=rtol * k0 / (8 * math.pi),
                          label=f"evanescent Green integral (z0={z0:g} m, omega={omega:g} rad/s)")

    def prop(kperp):
        kp = np.sqrt(np.maximum(k0 * k0 - kperp * kperp, 0.0))
        rs, rp = reflection_coefficients(stack, kp, omega, temperature, kperp)
        e = 1j * np.exp(2j * kperp * z0) / (8 * math.pi)
        a = (kperp / k0) ** 2
        return np.stack([e * (rs - a * rp), e * 2 * (1 - a) * rp], axis=-1)

    hint_p = [math.sqrt(k0 * k0 - h * h) for h in hints if h < k0]
    edges = oscillatory_edges(0.0, k0, math.pi / (4 * z0), hint_p)
    # absolute floor on the free-space radiative scale k0 / (8 pi)
    pr, _ = gauss_kronrod(prop, edges, rtol=rtol, atol=rtol * k0 / (8 * math.pi),
                          label=f"propagating Green integral (z0={z0:g} m, omega={omega:g} rad/s)")
    return (
        ScatteringGreenDiagonal(complex(ev[0]), complex(ev[1]), omega, z0, "evanescent"),
        ScatteringGreenDiagonal(complex(pr[0]), complex(pr[1]), omega, z0, "propagating"),
    )


def green_scattering_real(stack, z0: float, omega: float, temperature: float | None = None, rtol: float = 1e-9):
    """Evanescent and propagating parts of G^(s)(r0, r0, omega), omega > 0 real."""
    if not z0 > 0:
        raise ValueError("z0 must be positive")
    if not omega > 0:
        raise ValueError("omega must be positive")
    if stack.is_vacuum:
        z = ScatteringGreenDiagonal(0j, 0j, omega, z0, "evanescent")
        return z, ScatteringGreenDiagonal(0j, 0j, omega, z0, "propagating")
    return _green_real_cached(stack, float(z0), float(omega), temperature, float(rtol))


@functools.lru_cache(maxsize=65536)
def _green_imag_cached(stack, z0, xi, temperature, rtol):
    xr = max(xi, XI_STATIC)
    k0 = xi / C
    hints = stack.hints(1j * xr, temperature)
    kmax = max(40.0 / (2 * z0), 10 * k0) + k0

    def f(kappa):
        kp = np.sqrt(np.maximum(kappa * kappa - k0 * k0, 0.0))
        kz = 1j * np.sqrt(kp * kp + (xr / C) ** 2)
        rs, rp = reflection_coefficients(stack, kp, 1j * xr, temperature, kz)
        rs, rp = rs.real, rp.real
        # exp(-2 k0 z0) is pulled out so far-zone terms do not underflow inside the integral
        e = np.exp(-2 * (kappa - k0) * z0) / (8 * math.pi)
        return np.stack([e * (k0 * k0 * rs - kappa * kappa * rp), -2 * e * kp * kp * rp], axis=-1)

    hk = [math.sqrt(h * h + k0 * k0) for h in hints]
    val, _ = gauss_kronrod(f, _edges(k0, kmax, hk, z0), rtol=rtol, atol=0.0,
                           label=f"Matsubara Green integral (z0={z0:g} m, xi={xi:g} rad/s)")
    damp = math.exp(-2 * k0 * z0)
    hxx, hzz = float(val[0]) * damp, float(val[1]) * damp
    if xi > 0:
        gxx, gzz = hxx * C**2 / xi**2, hzz * C**2 / xi**2
    else:
        gxx = gzz = -math.inf if (hxx or hzz) else 0.0
    return ScatteringGreenDiagonal(gxx, gzz, 1j * xi, z0, "imaginary-axis", hxx, hzz)


def green_scattering_matsubara(stack, z0: float, xi: float, temperature: float | None = None, rtol: float = 1e-9):
    """G^(s)(r0, r0, i xi) together with h = xi^2 G / c^2.

    At xi = 0 only ``h`` is meaningful; the reflection coefficients are then
    taken at ``XI_STATIC``.
    """
    if not z0 > 0:
        raise ValueError("z0 must be positive")
    if xi < 0:
        raise ValueError("xi must be non-negative")
    if stack.is_vacuum:
        return ScatteringGreenDiagonal(0j, 0j, 1j * xi, z0, "imaginary-axis", 0.0, 0.0)
    return _green_imag_cached(stack, float(z0), float(xi), temperature, float(rtol))


def free_green_transverse(R, k):
    """Free-space G0 component perpendicular to the separation."""
    return np.exp(1j * k * R) * (k * k * R * R + 1j * k * R - 1) / (4 * math.pi * k * k * R**3)


def free_green_longitudinal(R, k):
    """Free-space G0 component along the separation."""
    return np.exp(1j * k * R) * (1 - 1j * k * R) / (2 * math.pi * k * k * R**3)
