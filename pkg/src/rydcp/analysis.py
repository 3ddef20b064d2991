"""Fits of computed potentials to the power-law and polynomial forms.

Power laws are fitted in log space (relative residuals); linear and
polynomial forms by ordinary least squares (absolute residuals).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "C3Fit",
    "EmpiricalModel",
    "FitError",
    "PowerLawFit",
    "empirical_potential",
    "extract_oscillation_wavelength",
    "fit_c3_vs_n",
    "fit_empirical_model",
    "fit_power_law",
    "linear_fit",
    "zero_crossings",
]

P1_BASIS = (7, 0)
P2_BASIS = (4, 3)


class FitError(ValueError):
    """Input cannot support the requested fit."""


@dataclass(frozen=True)
class PowerLawFit:
    """U = -C_alpha / z0**alpha; C_alpha > 0 for attractive data."""

    c_alpha: float
    alpha: float
    residual: float
    domain: tuple[float, float]

    def __call__(self, z0):
        return -self.c_alpha / np.asarray(z0, dtype=float) ** self.alpha


@dataclass(frozen=True)
class C3Fit:
    form: str
    coefficients: dict  # power -> coefficient (Hz m^3)
    residual: float
    domain: tuple[int, int]

    def __call__(self, n):
        n = np.asarray(n, dtype=float)
        return sum(c * n**p for p, c in self.coefficients.items())


def fit_power_law(samples) -> PowerLawFit:
    """Least-squares fit of log|U| against log z0."""
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise FitError("samples must be (z0, U) pairs")
    z, u = arr[:, 0], arr[:, 1]
    if len(z) < 4:
        raise FitError(f"need at least 4 samples, got {len(z)}")
    if np.any(z <= 0) or not np.all(np.isfinite(arr)):
        raise FitError("z0 must be positive and all values finite")
    sign = np.sign(u)
    if np.any(sign == 0) or np.any(sign != sign[0]):
        raise FitError("U changes sign over the sample range; a power law does not apply")
    a = np.column_stack([np.ones_like(z), -np.log(z)])
    (lnc, alpha), *_ = np.linalg.lstsq(a, np.log(np.abs(u)), rcond=None)
    c = -sign[0] * math.exp(lnc)
    pred = -c / z**alpha
    resid = float(np.sqrt(np.mean((pred / u - 1.0) ** 2)))
    return PowerLawFit(float(c), float(alpha), resid, (float(z.min()), float(z.max())))


def _design(n, powers):
    n = np.asarray(n, dtype=float)
    return np.column_stack([n**p for p in powers])


def _lstsq(a, y, what):
    # column scaling keeps n**7 and n**0 columns comparable
    scale = np.max(np.abs(a), axis=0)
    scale[scale == 0] = 1.0
    coef, _, rank, _ = np.linalg.lstsq(a / scale, y, rcond=None)
    if rank < a.shape[1]:
        raise FitError(f"{what}: rank-deficient design ({rank} < {a.shape[1]})")
    return coef / scale


def fit_c3_vs_n(data, form: str = "two-term") -> C3Fit:
    """Fit C3(n) as q1 n^4 + q2 n^3 ("two-term") or A n^p ("single-power")."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise FitError("data must be (n, C3) pairs")
    if len(arr) < 5:
        raise FitError(f"need at least 5 points, got {len(arr)}")
    n, c3 = arr[:, 0], arr[:, 1]
    dom = (int(n.min()), int(n.max()))
    if form == "two-term":
        coef = _lstsq(_design(n, (4, 3)), c3, "C3 two-term fit")
        fit = C3Fit(form, {4.0: float(coef[0]), 3.0: float(coef[1])}, 0.0, dom)
        resid = float(np.sqrt(np.mean((fit(n) - c3) ** 2)))
        return C3Fit(form, fit.coefficients, resid, dom)
    if form == "single-power":
        if np.any(c3 <= 0) or np.any(n <= 0):
            raise FitError("single-power fit needs positive n and C3")
        a = np.column_stack([np.ones_like(n), np.log(n)])
        lna, p = _lstsq(a, np.log(c3), "C3 single-power fit")
        fit = C3Fit(form, {float(p): float(math.exp(lna))}, 0.0, dom)
        resid = float(np.sqrt(np.mean((fit(n) / c3 - 1) ** 2)))
        return C3Fit(form, fit.coefficients, resid, dom)
    raise FitError(f"unknown form {form!r}; use 'two-term' or 'single-power'")


def linear_fit(x, y):
    """Ordinary least squares y = a x + b; returns (a, b, R^2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.ptp(x) == 0:
        raise FitError("linear fit needs at least two distinct abscissae")
    a, b = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (a * x + b)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(a), float(b), r2


@dataclass(frozen=True)
class EmpiricalModel:
    """C3(n, T) = p1(n) T + p2(n) with polynomial p1, p2.

    ``p1`` maps power -> coefficient in Hz m^3/K. The constant term of p1
    is therefore also per kelvin, unlike how it is sometimes written.
    """

    p1: dict
    p2: dict
    n_range: tuple[int, int]
    t_range: tuple[float, float]
    z0: float | None = None
    per_n: dict = field(default_factory=dict, repr=False, compare=False)

    @staticmethod
    def _poly(coeffs, n):
        n = np.asarray(n, dtype=float)
        return sum(c * n**p for p, c in coeffs.items())

    def p1_of(self, n):
        return self._poly(self.p1, n)

    def p2_of(self, n):
        return self._poly(self.p2, n)

    def c3(self, n, temperature):
        return self.p1_of(n) * temperature + self.p2_of(n)

    def in_domain(self, n, temperature) -> bool:
        lo, hi = self.n_range
        tlo, thi = self.t_range
        return bool(lo <= n <= hi and tlo <= temperature <= thi)

    def to_dict(self) -> dict:
        return {
            "p1": {str(k): v for k, v in sorted(self.p1.items(), reverse=True)},
            "p2": {str(k): v for k, v in sorted(self.p2.items(), reverse=True)},
            "n_range": list(self.n_range),
            "t_range": list(self.t_range),
            "z0": self.z0,
        }


def fit_empirical_model(grid, basis: str = "sparse", z0: float | None = None) -> EmpiricalModel:
    """Build the empirical model from (n, T, C3) samples.

    Each n gets a straight-line fit in T; the slopes and intercepts are
    then fitted in n. ``basis="sparse"`` uses {n^7, 1} for p1 and
    {n^4, n^3} for p2; ``basis="full"`` uses every power up to 7 and 4.
    """
    arr = np.asarray(grid, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3 or len(arr) == 0:
        raise FitError("grid must be (n, T, C3) triples")
    ns = np.unique(arr[:, 0])
    slopes, intercepts, per_n = [], [], {}
    for n in ns:
        rows = arr[arr[:, 0] == n]
        t = rows[:, 1]
        if np.unique(t).size < 5 or np.ptp(t) < 100.0:
            raise FitError(f"n={n:g}: T grid needs >= 5 points spanning >= 100 K (got {t.size}, span {np.ptp(t):g} K)")
        a, b, r2 = linear_fit(t, rows[:, 2])
        slopes.append(a)
        intercepts.append(b)
        per_n[int(n)] = (a, b, r2)
    if basis == "sparse":
        b1, b2 = P1_BASIS, P2_BASIS
    elif basis == "full":
        b1, b2 = tuple(range(7, -1, -1)), tuple(range(4, -1, -1))
    else:
        raise FitError(f"unknown basis {basis!r}; use 'sparse' or 'full'")
    if len(ns) < max(len(b1), len(b2)):
        if basis == "full":
            raise FitError(f"full basis needs at least {len(b1)} distinct n, got {len(ns)}")
        raise FitError(f"need at least {max(len(b1), len(b2))} distinct n, got {len(ns)}")
    c1 = _lstsq(_design(ns, b1), np.array(slopes), "p1 fit")
    c2 = _lstsq(_design(ns, b2), np.array(intercepts), "p2 fit")
    return EmpiricalModel(
        {float(p): float(c) for p, c in zip(b1, c1)},
        {float(p): float(c) for p, c in zip(b2, c2)},
        (int(ns.min()), int(ns.max())),
        (float(arr[:, 1].min()), float(arr[:, 1].max())),
        z0,
        per_n,
    )


def empirical_potential(model: EmpiricalModel, n, temperature, z0):
    """-(p1(n) T + p2(n)) / z0^3 in Hz."""
    if np.ndim(n) == 0 and np.ndim(temperature) == 0 and not model.in_domain(n, temperature):
        warnings.warn(f"(n={n}, T={temperature}) lies outside the fitted domain", stacklevel=2)
    return -model.c3(n, temperature) / np.asarray(z0, dtype=float) ** 3


def zero_crossings(z, u) -> np.ndarray:
    """Linearly interpolated sign changes of u(z)."""
    z = np.asarray(z, dtype=float)
    u = np.asarray(u, dtype=float)
    out = []
    for i in range(len(z) - 1):
        a, b = u[i], u[i + 1]
        if a == 0:
            if i == 0 or np.sign(u[i - 1]) != np.sign(b):
                out.append(z[i])
        elif a * b < 0:
            out.append(z[i] - a * (z[i + 1] - z[i]) / (b - a))
    return np.array(out)


def extract_oscillation_wavelength(trace, lambda_start: float) -> float:
    """Length of the first full cycle beyond lambda_start/2.

    A cycle spans three consecutive zero crossings.
    """
    arr = np.asarray(trace, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise FitError("trace must be (z0, U) pairs")
    order = np.argsort(arr[:, 0])
    zc = zero_crossings(arr[order, 0], arr[order, 1])
    zc = zc[zc >= 0.5 * lambda_start]
    if zc.size < 3:
        raise FitError(f"no full oscillation cycle beyond z0 = {0.5 * lambda_start:.4g} m ({zc.size} crossings)")
    return float(zc[2] - zc[0])
