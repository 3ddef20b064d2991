"""Rydberg structure of rubidium-87.

Energies come from Rydberg-Ritz quantum defects, radial wavefunctions from
Numerov integration of a semi-empirical core potential, and dipole matrix
elements from the radial overlap times standard angular-momentum algebra.
Atomic units are used internally; every public function takes and returns SI.
"""

from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np
import yaml
from scipy import constants as sc

__all__ = [
    "AtomData",
    "AtomicState",
    "BasisWindow",
    "DipoleElement",
    "NumerovError",
    "RadialWavefunction",
    "TransitionSet",
    "binding_energy",
    "dipole_element",
    "load_atom_data",
    "polarizability",
    "quantum_defect",
    "radial_matrix_element",
    "radial_wavefunction",
    "thermal_photon_number",
    "transition_frequency",
    "transitions",
    "wigner_3j",
]

DATA_ENV = "RYDCP_DATA_DIR"
_CHECK_NODES = True
A0 = sc.physical_constants["Bohr radius"][0]
RYDBERG_J = sc.physical_constants["Rydberg constant times hc in J"][0]
_SERIES = "SPDFGHIKLMNOQ"


# --------------------------------------------------------------------------
# data file
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AtomData:
    """Species constants loaded from the versioned data file."""

    species: str
    mass_u: float
    defects: tuple  # ((l, twoj, delta0, delta2), ...)
    Z: float
    alpha_c: float
    a1: tuple
    a2: tuple
    a3: tuple
    a4: tuple
    rc: tuple
    ground_n: tuple  # ((l, n_min), ...)
    source: str = field(default="", compare=False)

    @property
    def mass_ratio(self) -> float:
        """Reduced mass of the valence electron in units of m_e."""
        m = self.mass_u * sc.atomic_mass
        return m / (m + sc.m_e)

    @property
    def rydberg_energy(self) -> float:
        """Reduced-mass Rydberg energy in J."""
        return RYDBERG_J * self.mass_ratio

    def lowest_n(self, l: int) -> int:
        table = dict(self.ground_n)
        return max(table.get(l, l + 1), l + 1)


def _data_path(path: str | os.PathLike | None) -> Path:
    if path is not None:
        return Path(path)
    env = os.environ.get(DATA_ENV)
    if env:
        return Path(env) / "rb87.yaml"
    return Path(str(resources.files("rydcp") / "data" / "rb87.yaml"))


@functools.lru_cache(maxsize=8)
def _load_cached(path: str) -> AtomData:
    with open(path, encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if raw.get("schema_version") != 1:
        raise ValueError(f"{path}: unsupported schema_version {raw.get('schema_version')!r}")
    defects = []
    for key, row in raw["quantum_defects"].items():
        l, twoj = (int(v) for v in str(key).split(","))
        defects.append((l, twoj, float(row["delta0"]), float(row["delta2"])))
    mp = raw["model_potential"]
    return AtomData(
        species=str(raw["species"]),
        mass_u=float(raw["mass_u"]),
        defects=tuple(sorted(defects)),
        Z=float(mp["Z"]),
        alpha_c=float(mp["alpha_c"]),
        a1=tuple(map(float, mp["a1"])),
        a2=tuple(map(float, mp["a2"])),
        a3=tuple(map(float, mp["a3"])),
        a4=tuple(map(float, mp["a4"])),
        rc=tuple(map(float, mp["rc"])),
        ground_n=tuple(sorted((int(k), int(v)) for k, v in raw["ground_n"].items())),
        source=path,
    )


def load_atom_data(path: str | os.PathLike | None = None) -> AtomData:
    """Load species data; ``$RYDCP_DATA_DIR/rb87.yaml`` overrides the bundled file."""
    return _load_cached(str(_data_path(path).resolve()))


def _data(data: AtomData | None) -> AtomData:
    return load_atom_data() if data is None else data


# --------------------------------------------------------------------------
# states and energies
# --------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class AtomicState:
    """Fine-structure level |n l j m>; ``j`` and ``m`` are half-integers."""

    n: int
    l: int
    j: float
    m: float = 0.5

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 <= self.l < self.n:
            raise ValueError(f"need 0 <= l < n, got l={self.l}, n={self.n}")
        twoj, twom = 2 * self.j, 2 * self.m
        if twoj != round(twoj) or round(twoj) % 2 != 1:
            raise ValueError(f"j must be half-integer, got {self.j}")
        if abs(self.j - self.l) != 0.5:
            raise ValueError(f"j must be l +- 1/2, got l={self.l}, j={self.j}")
        if twom != round(twom) or round(twom) % 2 != 1 or abs(self.m) > self.j:
            raise ValueError(f"m must be half-integer with |m| <= j, got {self.m}")

    @property
    def label(self) -> str:
        l = _SERIES[self.l] if self.l < len(_SERIES) else f"[l={self.l}]"
        return f"{self.n}{l}{round(2 * self.j)}/2"

    def level(self) -> tuple[int, int, float]:
        return (self.n, self.l, self.j)

    def with_m(self, m: float) -> "AtomicState":
        return AtomicState(self.n, self.l, self.j, m)

    def __str__(self) -> str:
        return self.label


def quantum_defect(l: int, j: float, n: int, data: AtomData | None = None) -> float:
    """Rydberg-Ritz defect of the (l, j) series at principal number ``n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    twoj = round(2 * j)
    for ll, tj, d0, d2 in _data(data).defects:
        if ll == l and tj == twoj:
            return d0 + d2 / (n - d2) ** 2
    return 0.0


def effective_n(state: AtomicState, data: AtomData | None = None) -> float:
    return state.n - quantum_defect(state.l, state.j, state.n, data)


def binding_energy(state: AtomicState, data: AtomData | None = None) -> float:
    """Energy below the ionisation limit, in J (negative)."""
    d = _data(data)
    ns = effective_n(state, d)
    if ns <= 0:
        raise ValueError(f"{state.label}: effective quantum number {ns:.4f} is not positive")
    return -d.rydberg_energy / ns**2


def transition_frequency(u: AtomicState, k: AtomicState, data: AtomData | None = None) -> float:
    """Signed angular frequency (E_k - E_u)/hbar in rad/s."""
    return (binding_energy(k, data) - binding_energy(u, data)) / sc.hbar


# --------------------------------------------------------------------------
# radial wavefunctions
# --------------------------------------------------------------------------

class NumerovError(RuntimeError):
    """Radial integration failed to produce an acceptable bound state."""


@dataclass(frozen=True)
class RadialWavefunction:
    """R(r) on ``grid`` (Bohr radii), normalised so trapz(R^2 r^2, r) = 1.

    ``grid[i] = ((k0 + i) * step)**2`` so wavefunctions with equal ``step``
    share nodes and can be overlapped index by index.
    """

    state: AtomicState
    grid: np.ndarray
    values: np.ndarray
    step: float
    k0: int

    def norm(self) -> float:
        return float(np.trapezoid(self.values**2 * self.grid**2, self.grid))

    def expectation_r(self, power: int = 1) -> float:
        """<r^power> in Bohr radii."""
        r = self.grid
        return float(np.trapezoid(self.values**2 * r ** (2 + power), r))

    def node_count(self, rel_floor: float = 1e-6) -> int:
        v = self.values
        keep = np.abs(v) > rel_floor * np.abs(v).max()
        s = np.sign(v[keep])
        return int(np.count_nonzero(s[1:] != s[:-1]))


def model_potential(r: np.ndarray, l: int, data: AtomData | None = None) -> np.ndarray:
    """Core potential V_l(r) in Hartree, r in Bohr radii."""
    d = _data(data)
    i = min(l, len(d.a1) - 1)
    zl = 1 + (d.Z - 1) * np.exp(-d.a1[i] * r) - r * (d.a3[i] + d.a4[i] * r) * np.exp(-d.a2[i] * r)
    pol = -d.alpha_c / (2 * r**4) * (1 - np.exp(-((r / d.rc[i]) ** 6)))
    return -zl / r + pol


def radial_wavefunction(
    state: AtomicState,
    step: float = 0.005,
    data: AtomData | None = None,
    r_inner: float = 1e-4,
) -> RadialWavefunction:
    """Integrate the radial equation inward with Numerov's method.

    The equation is solved for w(x) with r = x^2 and u = r R = x^(1/2) w,
    which turns the Coulomb problem into one with a nearly uniform local
    wavelength. Integration starts at r_out = 2n(n+15) and runs to
    ``r_inner``; if the solution grows toward the origin inside the
    centrifugal barrier, it is truncated at the minimum of |w|.
    """
    d = _data(data)
    return _radial_cached(state.n, state.l, state.j, float(step), d, float(r_inner))


@functools.lru_cache(maxsize=4096)
def _radial_cached(n: int, l: int, j: float, step: float, d: AtomData, r_inner: float) -> RadialWavefunction:
    state = AtomicState(n, l, j)
    if n > 150:
        raise NumerovError(f"{state.label}: n > 150 is outside the validated range")
    mu = d.mass_ratio
    ns = n - quantum_defect(l, j, n, d)
    energy = -mu / (2 * ns**2)
    r_out = 2.0 * n * (n + 15)
    k_hi = int(math.ceil(math.sqrt(r_out) / step))
    # keep the Numerov coefficient 1 - h^2 g / 12 well away from zero near the origin
    r_min = max(r_inner, (4 * l * (l + 1) + 0.75) * step * step / 1.2)
    k_lo = max(1, int(math.ceil(math.sqrt(r_min) / step)))
    x = np.arange(k_lo, k_hi + 1) * step
    r = x * x
    # series without a tabulated defect sit at the hydrogenic energy, so the
    # matching potential is the bare Coulomb tail
    tabulated = any(ll == l and tj == round(2 * j) for ll, tj, _, _ in d.defects)
    v = model_potential(r, l, d) if tabulated else -1.0 / r
    g = 4 * r * (2 * mu * (v - energy)) + (4 * l * (l + 1) + 0.75) / r
    if g[-1] <= 0:
        raise NumerovError(f"{state.label}: outer boundary r={r_out:.0f} a0 is not classically forbidden")
    # local oscillation check: at least ten points per period in x
    kmax = math.sqrt(max(0.0, -g.min()))
    if kmax * step > 2 * math.pi / 10:
        raise NumerovError(
            f"{state.label}: step {step} too coarse, {2 * math.pi / (kmax * step):.1f} points per oscillation"
        )
    c = 1.0 - step * step * g / 12.0
    c = c.tolist()
    w = [0.0] * len(c)
    w[-1] = 1e-12
    w[-2] = 1e-12 * math.exp(math.sqrt(g[-1]) * step)
    for i in range(len(c) - 2, 0, -1):
        w[i - 1] = ((12.0 - 10.0 * c[i]) * w[i] - c[i + 1] * w[i + 1]) / c[i - 1]
    w = np.asarray(w)

    start = 0
    if g[0] > 0:
        aw = np.abs(w)
        i = 0
        while i + 1 < len(aw) and g[i + 1] > 0 and aw[i + 1] < aw[i]:
            i += 1
        if i + 1 < len(w) and w[i] * w[i + 1] < 0:
            i += 1
        start = i
    w = w[start:]
    x = x[start:]
    r = r[start:]
    R = w / x**1.5
    norm = np.trapezoid(R * R * r * r, r)
    if not np.isfinite(norm) or norm <= 0:
        raise NumerovError(f"{state.label}: non-finite norm on {len(r)} points (step {step})")
    R = R / math.sqrt(norm)
    # sign convention: outermost lobe positive
    peak = int(np.argmax(np.abs(R) * r))
    if R[peak] < 0:
        R = -R
    wf = RadialWavefunction(state, r, R, step, k_lo + start)
    if _CHECK_NODES and wf.node_count() != n - l - 1:
        raise NumerovError(
            f"{state.label}: found {wf.node_count()} nodes, expected {n - l - 1} "
            f"(step {step}, {len(r)} points, r in [{r[0]:.3g}, {r[-1]:.3g}] a0)"
        )
    return wf


def _overlap(a: RadialWavefunction, b: RadialWavefunction, power: int) -> float:
    if a.step != b.step:
        raise ValueError("wavefunctions must share a grid step")
    k0 = max(a.k0, b.k0)
    k1 = min(a.k0 + len(a.grid), b.k0 + len(b.grid))
    if k1 - k0 < 2:
        return 0.0
    r = a.grid[k0 - a.k0:k1 - a.k0]
    y = a.values[k0 - a.k0:k1 - a.k0] * b.values[k0 - b.k0:k1 - b.k0] * r ** (2 + power)
    return float(np.trapezoid(y, r))


def radial_matrix_element(u: AtomicState, k: AtomicState, step: float = 0.005, data: AtomData | None = None) -> float:
    """<R_u| r |R_k> in Bohr radii."""
    return _overlap(radial_wavefunction(u, step, data), radial_wavefunction(k, step, data), 1)


# --------------------------------------------------------------------------
# angular algebra
# --------------------------------------------------------------------------

@functools.lru_cache(maxsize=65536)
def _w3j_doubled(tj1, tj2, tj3, tm1, tm2, tm3) -> float:
    if tm1 + tm2 + tm3 != 0:
        return 0.0
    if any(abs(m) > j for j, m in ((tj1, tm1), (tj2, tm2), (tj3, tm3))):
        return 0.0
    if any((j + m) % 2 for j, m in ((tj1, tm1), (tj2, tm2), (tj3, tm3))):
        return 0.0
    if tj3 > tj1 + tj2 or tj3 < abs(tj1 - tj2) or (tj1 + tj2 + tj3) % 2:
        return 0.0
    f = math.factorial
    a = (tj1 + tj2 - tj3) // 2
    b = (tj1 - tj2 + tj3) // 2
    c = (-tj1 + tj2 + tj3) // 2
    tri = f(a) * f(b) * f(c) / f((tj1 + tj2 + tj3) // 2 + 1)
    pre = (
        f((tj1 + tm1) // 2) * f((tj1 - tm1) // 2)
        * f((tj2 + tm2) // 2) * f((tj2 - tm2) // 2)
        * f((tj3 + tm3) // 2) * f((tj3 - tm3) // 2)
    )
    k_lo = max(0, (tj2 - tj3 - tm1) // 2, (tj1 - tj3 + tm2) // 2)
    k_hi = min(a, (tj1 - tm1) // 2, (tj2 + tm2) // 2)
    total = 0
    for k in range(k_lo, k_hi + 1):
        den = (
            f(k) * f(a - k) * f((tj1 - tm1) // 2 - k) * f((tj2 + tm2) // 2 - k)
            * f((tj3 - tj2 + tm1) // 2 + k) * f((tj3 - tj1 - tm2) // 2 + k)
        )
        total += (-1) ** k / den
    sign = -1 if ((tj1 - tj2 - tm3) // 2) % 2 else 1
    return sign * math.sqrt(tri * pre) * total


def wigner_3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3j symbol for integer or half-integer arguments (Racah formula)."""
    args = [2 * v for v in (j1, j2, j3, m1, m2, m3)]
    if any(abs(a - round(a)) > 1e-9 for a in args):
        raise ValueError("arguments must be integer or half-integer")
    return _w3j_doubled(*(int(round(a)) for a in args))


def clebsch_gordan(j1, m1, j2, m2, J, M) -> float:
    """<j1 m1; j2 m2 | J M>."""
    phase = -1 if round(j1 - j2 + M) % 2 else 1
    return phase * math.sqrt(2 * J + 1) * wigner_3j(j1, j2, J, m1, m2, -M)


def _c1(l, ml, lp, mlp, q) -> float:
    # <l ml | C^1_q | l' ml'>
    phase = -1 if round(ml) % 2 else 1
    return (
        phase * math.sqrt((2 * l + 1) * (2 * lp + 1))
        * wigner_3j(l, 1, lp, -ml, q, mlp) * wigner_3j(l, 1, lp, 0, 0, 0)
    )


def angular_factor(u: AtomicState, k: AtomicState, q: int) -> float:
    """<l j m | C^1_q | l' j' m'> in the fine-structure basis."""
    total = 0.0
    for ms in (-0.5, 0.5):
        ml, mlp = u.m - ms, k.m - ms
        if abs(ml) > u.l or abs(mlp) > k.l:
            continue
        cg = clebsch_gordan(u.l, ml, 0.5, ms, u.j, u.m) * clebsch_gordan(k.l, mlp, 0.5, ms, k.j, k.m)
        if cg:
            total += cg * _c1(u.l, ml, k.l, mlp, q)
    return total


@dataclass(frozen=True)
class DipoleElement:
    """<bra| d |ket> with d = -e r, Cartesian components in C m."""

    bra: AtomicState
    ket: AtomicState
    cartesian: np.ndarray

    def conj(self) -> "DipoleElement":
        return DipoleElement(self.ket, self.bra, np.conj(self.cartesian))


def dipole_element(u: AtomicState, k: AtomicState, step: float = 0.005, data: AtomData | None = None) -> DipoleElement:
    """Cartesian dipole matrix element between two fine-structure sublevels."""
    zero = np.zeros(3, dtype=complex)
    if abs(u.l - k.l) != 1 or abs(u.j - k.j) > 1 or abs(u.m - k.m) > 1:
        return DipoleElement(u, k, zero)
    sph = {q: angular_factor(u, k, q) for q in (-1, 0, 1)}
    if not any(sph.values()):
        return DipoleElement(u, k, zero)
    # common normalisation for the pair regardless of argument order
    a, b = (u, k) if u.level() <= k.level() else (k, u)
    rad = radial_matrix_element(a, b, step, data)
    scale = -sc.e * A0 * rad
    vec = np.array([
        (sph[-1] - sph[1]) / math.sqrt(2),
        1j * (sph[-1] + sph[1]) / math.sqrt(2),
        sph[0],
    ], dtype=complex)
    return DipoleElement(u, k, scale * vec)


# --------------------------------------------------------------------------
# polarizability
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BasisWindow:
    """Intermediate levels n' in [n - half_width, n + half_width], l' = l +- 1."""

    half_width: int = 15

    def levels(self, u: AtomicState, data: AtomData | None = None) -> list[tuple[int, int, float]]:
        d = _data(data)
        out = []
        for lp in (u.l - 1, u.l + 1):
            if lp < 0:
                continue
            for jp in (lp - 0.5, lp + 0.5):
                if jp < 0.5 or abs(jp - u.j) > 1:
                    continue
                lo = max(u.n - self.half_width, d.lowest_n(lp))
                for n_p in range(lo, u.n + self.half_width + 1):
                    if (n_p, lp, jp) != u.level():
                        out.append((n_p, lp, jp))
        return sorted(out)


@dataclass(frozen=True)
class TransitionSet:
    """All dipole couplings of one sublevel inside a basis window.

    ``omega[k]`` is omega_ku in rad/s and ``tensor[k, i, j]`` is
    sum_{m'} d_uk^i d_ku^j in (C m)^2.
    """

    state: AtomicState
    levels: tuple
    omega: np.ndarray
    tensor: np.ndarray

    @property
    def strengths(self) -> np.ndarray:
        """Diagonal |d_i|^2 sums, shape (K, 3)."""
        return np.real(np.einsum("kii->ki", self.tensor))

    def level_states(self) -> list[AtomicState]:
        return [AtomicState(n, l, j) for n, l, j in self.levels]


def transitions(
    u: AtomicState,
    window: BasisWindow | None = None,
    step: float = 0.005,
    data: AtomData | None = None,
) -> TransitionSet:
    """Couplings of ``u`` to every level in the basis window (cached)."""
    return _transitions_cached(u, window or BasisWindow(), float(step), _data(data))


@functools.lru_cache(maxsize=256)
def _transitions_cached(u, window, step, d) -> TransitionSet:
    levels, omegas, tensors = [], [], []
    for n_p, lp, jp in window.levels(u, d):
        k0 = AtomicState(n_p, lp, jp)
        t = np.zeros((3, 3), dtype=complex)
        for twom in range(-round(2 * jp), round(2 * jp) + 1, 2):
            k = k0.with_m(twom / 2)
            duk = dipole_element(u, k, step, d).cartesian
            if not duk.any():
                continue
            t += np.outer(duk, np.conj(duk))
        levels.append((n_p, lp, jp))
        omegas.append(transition_frequency(u, k0, d))
        tensors.append(t)
    return TransitionSet(u, tuple(levels), np.array(omegas), np.array(tensors).reshape(-1, 3, 3))


def polarizability(
    u: AtomicState,
    omega,
    window: BasisWindow | None = None,
    damping: float | None = None,
    data: AtomData | None = None,
    tset: TransitionSet | None = None,
) -> np.ndarray:
    """Dynamic dipole polarizability tensor in C m^2 / V.

    ``omega`` may be real (rad/s) or purely imaginary (i xi), scalar or array;
    the result has shape ``omega.shape + (3, 3)``. On the real axis the
    infinitesimal damping defaults to 1e-6 |omega|; pass ``damping=0`` to
    demand the undamped sum, which raises at a transition pole.
    """
    ts = tset if tset is not None else transitions(u, window, data=data)
    w = np.asarray(omega, dtype=complex)
    real_axis = np.all(w.imag == 0)
    if not real_axis and np.any(w.real != 0):
        raise ValueError("omega must be purely real or purely imaginary")
    if real_axis:
        eps = 1e-6 * np.abs(w.real) if damping is None else np.full(w.shape, float(damping))
    else:
        eps = np.zeros(w.shape)
    wk = ts.omega.reshape((1,) * w.ndim + (-1,))
    we = (w + 1j * eps)[..., None]
    d1 = wk - we
    d2 = wk + we
    if np.any(d1 == 0) or np.any(d2 == 0):
        raise ZeroDivisionError(f"{u.label}: frequency sits on a transition pole with zero damping")
    a = np.einsum("...k,kij->...ij", 1 / d1, ts.tensor)
    b = np.einsum("...k,kji->...ij", 1 / d2, ts.tensor)
    return (a + b) / sc.hbar


def polarizability_imag_diag(ts: TransitionSet, xi) -> np.ndarray:
    """Diagonal alpha_ii(i xi), real, shape ``xi.shape + (3,)``."""
    xi = np.asarray(xi, dtype=float)[..., None]
    wk = ts.omega
    weight = 2 * wk / (wk * wk + xi * xi)
    return np.einsum("...k,ki->...i", weight, ts.strengths) / sc.hbar


def thermal_photon_number(omega, T):
    """Bose-Einstein occupation 1/(exp(hbar omega / k T) - 1); zero at T = 0."""
    omega = np.asarray(omega, dtype=float)
    T = np.asarray(T, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be positive")
    if np.any(T < 0):
        raise ValueError("T must be non-negative")
    with np.errstate(divide="ignore", over="ignore"):
        x = np.where(T > 0, sc.hbar * omega / (sc.k * np.where(T > 0, T, 1.0)), np.inf)
        out = 1.0 / np.expm1(x)
    return out if out.ndim else float(out)


def iter_sublevels(level: tuple[int, int, float]) -> Iterable[AtomicState]:
    n, l, j = level
    for twom in range(-round(2 * j), round(2 * j) + 1, 2):
        yield AtomicState(n, l, j, twom / 2)
