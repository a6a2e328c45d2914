"""Anisotropic boxes, dual-lattice modes, and deterministic spectral sums.

The box is a d-dimensional parallelepiped with side lengths L_j = V^{alpha_j},
periodic boundary conditions, and dual lattice k_j = 2 pi n_j / L_j.  All
Bose-gas sums in the package run over modes enumerated here, truncated with a
certified tail bound and accumulated in a fixed order so that repeated runs
are bit-identical.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc


class TruncationError(RuntimeError):
    """The requested tail tolerance is not achievable within the index cap."""


@dataclass(frozen=True)
class BoxGeometry:
    """Anisotropic box V^{alpha_1} x ... x V^{alpha_d}, periodic b.c.

    The exponents must be sorted in decreasing order and sum to one, so the
    product of the side lengths is exactly V.
    """

    V: float
    alphas: tuple[float, ...]

    def __post_init__(self):
        if self.V <= 0:
            raise ValueError("V must be positive")
        a = self.alphas
        if len(a) < 1:
            raise ValueError("need at least one anisotropy exponent")
        if abs(sum(a) - 1.0) > 1e-12:
            raise ValueError(f"anisotropy exponents must sum to 1, got {sum(a)!r}")
        if any(a[i] < a[i + 1] for i in range(len(a) - 1)):
            raise ValueError("anisotropy exponents must be non-increasing")
        prod = 1.0
        for L in self.sides:
            prod *= L
        if abs(prod - self.V) > 1e-10 * self.V:
            raise ValueError("side lengths do not multiply back to V")

    @property
    def d(self) -> int:
        return len(self.alphas)

    @property
    def sides(self) -> tuple[float, ...]:
        return tuple(self.V ** a for a in self.alphas)

    @classmethod
    def cubic(cls, V: float, d: int = 3) -> "BoxGeometry":
        return cls(V, (1.0 / d,) * d)

    def wavevector(self, n) -> tuple[float, ...]:
        L = self.sides
        return tuple(2.0 * np.pi * n_j / L_j for n_j, L_j in zip(n, L))

    def energy(self, n) -> float:
        """Kinetic energy sum_j k_j^2 of the mode with index vector n."""
        return float(sum(k * k for k in self.wavevector(n)))


@dataclass(frozen=True)
class Mode:
    n: tuple[int, ...]
    k: tuple[float, ...]
    energy: float


@dataclass(frozen=True)
class SumSpec:
    """Truncation and ordering policy for spectral sums.

    ``tol`` is the per-mode occupation threshold: a mode is kept iff its Bose
    occupation exceeds tol.  ``max_radius`` caps the per-axis index range;
    hitting it raises TruncationError.  The summation order is fixed:
    shells of increasing max_j |n_j|, lexicographic within a shell.
    """

    tol: float = 1e-12
    max_radius: int = 100_000_000
    order: str = "shell-lex"


#: default policy shared across the package
DEFAULT_SPEC = SumSpec()


def bose_occupation(energy, beta: float, mu: float):
    """Bose occupation 1/(e^{beta (energy - mu)} - 1); requires mu < energy."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    e = np.asarray(energy, dtype=float)
    if np.any(e <= mu):
        raise ValueError("occupation undefined for mu >= energy")
    # e^{-x} / (1 - e^{-x}) underflows to 0 for huge x instead of
    # overflowing inside expm1
    x = beta * (e - mu)
    out = np.exp(-x) / (-np.expm1(-x))
    return float(out) if np.isscalar(energy) else out


class ModeSet:
    """Deterministically ordered mode collection with a certified tail bound.

    Modes are stored as arrays (index matrix ``n``, energies ``energy``) in
    shell-lexicographic order.  ``tail_occupation`` bounds the total Bose
    occupation of every omitted mode of the infinite dual lattice at the
    (beta, mu) of enumeration; for any chemical potential <= mu the same
    bound applies.  Iteration yields ``Mode`` records in storage order.
    """

    def __init__(self, box, beta, mu, spec, n, energy, shell_starts, tail):
        self.box = box
        self.beta = beta
        self.mu = mu
        self.spec = spec
        self.n = n                      # (N, d) int32
        self.energy = energy            # (N,) float64
        self.shell_starts = shell_starts  # boundaries for per-shell reduction
        self.tail_occupation = tail

    def __len__(self):
        return len(self.energy)

    def __iter__(self):
        for i in range(len(self.energy)):
            yield self[i]

    def __getitem__(self, i) -> Mode:
        n = tuple(int(v) for v in self.n[i])
        return Mode(n=n, k=self.box.wavevector(n), energy=float(self.energy[i]))


def _axis_tail(R: int, a: float) -> float:
    """Upper bound on sum_{|n| > R} e^{-a n^2} (both signs)."""
    # sum_{n > R} e^{-a n^2} <= int_R^inf e^{-a t^2} dt
    return float(np.sqrt(np.pi / a) * erfc(R * np.sqrt(a)))


def enumerate_modes(box: BoxGeometry, beta: float, mu: float,
                    spec: SumSpec = DEFAULT_SPEC) -> ModeSet:
    """Enumerate every dual-lattice mode whose occupation exceeds spec.tol.

    Returns the modes in shell-lexicographic order together with a certified
    bound on the total occupation of all omitted modes: omitted modes inside
    the scanned index box are summed exactly, and everything beyond is
    bounded by a per-axis Gaussian-tail (erfc) majorant of the Boltzmann
    factor.  Occupations are monotone in mu, so the bound also certifies
    truncation for any chemical potential below the one given.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    d = box.d
    L = box.sides
    # occupation > tol  <=>  beta (eps - mu) < log(1 + 1/tol)
    E = np.log1p(1.0 / spec.tol) / beta
    cut = E + mu
    if cut <= 0.0:
        # even the zero mode is below threshold; certify the whole lattice
        full = (1.0 + spec.tol) * np.exp(beta * mu)
        for j in range(d):
            a = beta * (2.0 * np.pi / L[j]) ** 2
            full *= 1.0 + 2.0 * np.sum(np.exp(-a * np.arange(1, 200) ** 2)) \
                + _axis_tail(199, a)
        empty = np.empty((0, d), dtype=np.int32)
        return ModeSet(box, beta, mu, spec, empty, np.empty(0), np.array([0]), full)

    R = [int(np.floor(Lj * np.sqrt(cut) / (2.0 * np.pi))) for Lj in L]
    if any(r > spec.max_radius for r in R):
        raise TruncationError(
            f"index radius {max(R)} exceeds cap {spec.max_radius}")

    axes = [np.arange(-r, r + 1, dtype=np.int64) for r in R]
    k2 = [(2.0 * np.pi * ax / Lj) ** 2 for ax, Lj in zip(axes, L)]

    # energies on the full index box via broadcasting
    shape = tuple(len(ax) for ax in axes)
    eps = np.zeros(shape)
    for j in range(d):
        view = [1] * d
        view[j] = -1
        eps = eps + k2[j].reshape(view)
    eps = eps.ravel()

    keep = eps - mu < E
    kept_eps = eps[keep]

    # exact occupation mass of scanned-but-dropped modes (all have eps > mu)
    dropped = eps[~keep]
    tail = float(np.sum(1.0 / np.expm1(beta * (dropped - mu)))) if dropped.size else 0.0
    del dropped, eps

    # beyond the scanned box: occupation <= (1+tol) e^{beta mu} e^{-beta eps},
    # union bound over which axis overflows
    theta_full, theta_tail = [], []
    for j in range(d):
        a = beta * (2.0 * np.pi / L[j]) ** 2
        inside = 1.0 + 2.0 * float(np.sum(np.exp(-a * np.arange(1, R[j] + 1) ** 2)))
        t = _axis_tail(R[j], a)
        theta_full.append(inside + t)
        theta_tail.append(t)
    beyond = 0.0
    for j in range(d):
        prod = theta_tail[j]
        for i in range(d):
            if i != j:
                prod *= theta_full[i]
        beyond += prod
    tail += (1.0 + spec.tol) * np.exp(beta * mu) * beyond

    # index vectors of the kept modes, one axis at a time to bound memory
    cols = []
    for j in range(d):
        view = [1] * d
        view[j] = -1
        col = np.broadcast_to(axes[j].reshape(view), shape).ravel()[keep]
        cols.append(col.astype(np.int32))
    del keep

    shell = np.abs(cols[0]).astype(np.int32)
    for c in cols[1:]:
        np.maximum(shell, np.abs(c), out=shell)

    # fixed order: shell index first, then lexicographic over (n_1, ..., n_d)
    order = np.lexsort(tuple(reversed(cols)) + (shell,))
    n_mat = np.column_stack([c[order] for c in cols])
    kept_eps = kept_eps[order]
    shell = shell[order]

    # shell boundaries for fixed-order compensated reduction
    if len(shell):
        starts = np.flatnonzero(np.r_[True, np.diff(shell) > 0])
    else:
        starts = np.array([0])
    return ModeSet(box, beta, mu, spec, n_mat, kept_eps, starts, tail)


def _kahan(parts) -> float:
    s = 0.0
    comp = 0.0
    for x in parts:
        y = float(x) - comp
        t = s + y
        comp = (t - s) - y
        s = t
    return s


def spectral_sum(box: BoxGeometry, beta: float, mu: float, weight,
                 spec: SumSpec = DEFAULT_SPEC,
                 modes: ModeSet | None = None) -> tuple[float, float]:
    """Deterministic truncated sum of a per-mode weight over the dual lattice.

    ``weight(energy_array, n_matrix)`` must return one value per mode
    (vectorized).  Modes are enumerated at (beta, mu) unless a pre-built
    ``modes`` set is supplied.  The sum runs shell by shell in fixed order
    with compensated accumulation across shells, so identical inputs give
    bit-identical results regardless of how shells would be scheduled.

    Returns ``(value, tail)`` where ``tail`` bounds the total occupation of
    the omitted modes; for weights dominated by c * occupation, the omitted
    weight is below c * tail.
    """
    if modes is None:
        modes = enumerate_modes(box, beta, mu, spec)
    if len(modes) == 0:
        return 0.0, modes.tail_occupation
    w = np.asarray(weight(modes.energy, modes.n), dtype=float)
    # per-shell partials in fixed order, then compensated cross-shell reduce
    partials = np.add.reduceat(w, modes.shell_starts)
    return _kahan(partials), modes.tail_occupation


@lru_cache(maxsize=4)
def occupancy_table(box: BoxGeometry, beta: float, tol: float = 1e-12) -> ModeSet:
    """Cached mode superset enumerated at mu = 0.

    Valid for every mu <= 0: the threshold set at mu = 0 contains the
    threshold set at any lower mu, and the certified tail bound majorizes the
    corresponding tail.  Chemical-potential solvers reuse this table across
    bracketing iterations instead of re-enumerating.
    """
    return enumerate_modes(box, beta, 0.0, SumSpec(tol=tol))
