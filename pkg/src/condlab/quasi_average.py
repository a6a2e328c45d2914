"""Symmetry-breaking sources and quasi-average protocols for the free gas.

A source couples linearly to a single mode q of the box: the grand-canonical
pressure acquires a term lambda (e^{i phi} b_q^* + h.c.) / sqrt(V) and the mode
develops a coherent amplitude

    <b_q / sqrt(V)> = lambda e^{i phi} / (eps_q - mu),

while the density equation gains the condensate seed lambda^2/(eps_q - mu)^2.
Everything in this module is exact at finite volume; the limits are taken by
the fitting protocols of :mod:`condlab.asymptotics`, with the order of limits
(volume first, then source strength, or the reverse) made explicit in every
driver.  Two source families are supported:

* mode-pinned -- the integer index n is held fixed, so the physical wavevector
  collapses onto the condensate as the box grows (the case that feeds the
  condensate);
* wavevector-pinned -- a target wavevector is held (approximately) fixed by
  rescaling the index with the box, so the driven mode keeps a positive energy
  in the limit and the source leaves no condensate behind, only a shift of the
  saturation density.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .asymptotics import LimitEstimate, double_limit, extrapolate, linear_intercept
from .ideal_bose import _certified_density, _density_evaluator, critical_density
from .lattice import DEFAULT_SPEC, BoxGeometry, SumSpec, bose_occupation

__all__ = [
    "SourceSpec",
    "QaProtocol",
    "QaLimits",
    "OrderReport",
    "EquivalenceReport",
    "sourced_density",
    "sourced_solve_mu",
    "qa_field",
    "qa_mode_density",
    "qa_table",
    "bogoliubov_field",
    "order_sensitivity",
    "equivalence_report",
    "shifted_critical_density",
]


@dataclass(frozen=True)
class SourceSpec:
    """A single-mode symmetry-breaking source.

    Exactly one of ``mode`` (integer index, held fixed along the ladder) or
    ``wavevector`` (target wavevector, index rescaled per box) may be given;
    with neither, the source sits on the zero mode.
    """

    amplitude: float
    phase: float = 0.0
    mode: tuple | None = None
    wavevector: tuple | None = None

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("source amplitude must be nonnegative")
        if self.mode is not None and self.wavevector is not None:
            raise ValueError("give either a mode index or a wavevector, not both")

    def resolve(self, box: BoxGeometry) -> tuple[tuple[int, ...], float]:
        """Concrete (index, energy) of the driven mode on a given box."""
        if self.wavevector is not None:
            if len(self.wavevector) != box.d:
                raise ValueError("wavevector dimension does not match the box")
            n = tuple(int(round(k * L / (2.0 * math.pi)))
                      for k, L in zip(self.wavevector, box.sides))
        else:
            n = self.mode if self.mode is not None else (0,) * box.d
        return n, box.energy(n)

    def limiting_energy(self, alphas) -> float:
        """Energy of the driven mode after the box has grown without bound.

        Mode-pinned sources keep a contribution only from axes whose side does
        not grow (anisotropy exponent 0); wavevector-pinned sources keep the
        full |k|^2.
        """
        if self.wavevector is not None:
            return float(sum(k * k for k in self.wavevector))
        n = self.mode if self.mode is not None else (0,) * len(alphas)
        return float(sum((2.0 * math.pi * nj) ** 2
                         for nj, a in zip(n, alphas) if a == 0.0))

    def replace_amplitude(self, amplitude: float) -> "SourceSpec":
        return SourceSpec(amplitude, self.phase, self.mode, self.wavevector)


def sourced_density(box: BoxGeometry, beta: float, mu: float,
                    source: SourceSpec, spec: SumSpec = DEFAULT_SPEC) -> float:
    """Total density of the sourced gas at chemical potential mu < 0."""
    density, _ = _density_evaluator(box, beta, spec)
    _, eq = source.resolve(box)
    return density(mu) + source.amplitude**2 / (eq - mu) ** 2


def sourced_solve_mu(box: BoxGeometry, beta: float, rho: float,
                     source: SourceSpec, spec: SumSpec = DEFAULT_SPEC) -> float:
    """Chemical potential of the sourced gas at a prescribed total density.

    The density -- thermal sum plus the coherent seed lambda^2/(eps_q - mu)^2
    -- is strictly increasing in mu on (-inf, 0) and diverges at 0, so the
    root is unique and bracketed root finding cannot fail.  The root is
    accepted only if a compensated re-evaluation puts the residual below
    1e-10 rho.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    density, table = _density_evaluator(box, beta, spec)
    _, eq = source.resolve(box)
    lam2 = source.amplitude**2

    def g(mu):
        return density(mu) + lam2 / (eq - mu) ** 2 - rho

    hi = -1e-18
    lo = -1.0 / beta
    while g(lo) > 0.0:
        lo *= 2.0
        if lo < -1e18:
            raise RuntimeError("density bracket did not close")
    mu = float(brentq(g, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=200))
    resid = abs(_certified_density(table, beta, mu, box.V)
                + lam2 / (eq - mu) ** 2 - rho)
    if resid > 1e-10 * rho:
        raise RuntimeError(
            f"sourced chemical-potential solve residual {resid:.3e} exceeds "
            f"1e-10 rho")
    return mu


def qa_field(box: BoxGeometry, mu: float, source: SourceSpec) -> complex:
    """Coherent amplitude <b_q/sqrt(V)> = lambda e^{i phi}/(eps_q - mu)."""
    _, eq = source.resolve(box)
    return (source.amplitude / (eq - mu)) * cmath.exp(1j * source.phase)


def qa_mode_density(box: BoxGeometry, beta: float, mu: float,
                    source: SourceSpec) -> float:
    """Density carried by the driven mode: thermal occupation plus seed."""
    _, eq = source.resolve(box)
    return (bose_occupation(eq, beta, mu) / box.V
            + source.amplitude**2 / (eq - mu) ** 2)


def shifted_critical_density(beta: float, amplitude: float,
                             energy: float) -> float:
    """Saturation density of a gas driven at a mode of positive limiting
    energy: the seed lambda^2/eps^2 simply adds to the free critical density,
    and any surplus beyond the shifted value condenses as usual."""
    if energy <= 0:
        raise ValueError("the shifted critical density needs a positive "
                         "limiting energy")
    return critical_density(beta) + amplitude**2 / energy**2


# ---------------------------------------------------------------------------
# ladder protocols


@dataclass(frozen=True)
class QaProtocol:
    """A rectangular (amplitude x volume) quasi-average measurement plan."""

    alphas: tuple
    beta: float
    rho: float
    volumes: tuple
    amplitudes: tuple
    phase: float = 0.0
    mode: tuple | None = None
    wavevector: tuple | None = None
    shell_delta: float = 0.1
    window: int = 3

    def source(self, amplitude: float) -> SourceSpec:
        return SourceSpec(amplitude, self.phase, self.mode, self.wavevector)

    def boxes(self):
        return [BoxGeometry(V, self.alphas) for V in self.volumes]


def _shell_density(table, beta, mu, delta, V, extra_energy=None, extra=0.0):
    """Density inside the shell eps <= delta^2, source seed included when the
    driven mode falls inside."""
    occ = 1.0 / np.expm1(beta * (table.energy[table.energy <= delta * delta] - mu))
    val = math.fsum(occ.tolist()) / V
    if extra_energy is not None and extra_energy <= delta * delta:
        val += extra
    return val


def qa_table(protocol: QaProtocol, spec: SumSpec = DEFAULT_SPEC,
             amplitudes=None) -> list[dict]:
    """Exact finite-volume table of the protocol, one row per (lambda, V).

    Columns match the on-disk format: lambda, V, mu, field_re, field_im,
    mode_density, shell_density.
    """
    rows = []
    for lam in (protocol.amplitudes if amplitudes is None else amplitudes):
        src = protocol.source(lam)
        for box in protocol.boxes():
            mu = sourced_solve_mu(box, protocol.beta, protocol.rho, src, spec)
            fld = qa_field(box, mu, src)
            md = qa_mode_density(box, protocol.beta, mu, src)
            _, table = _density_evaluator(box, protocol.beta, spec)
            _, eq = src.resolve(box)
            shell = _shell_density(table, protocol.beta, mu,
                                   protocol.shell_delta, box.V,
                                   extra_energy=eq,
                                   extra=lam**2 / (eq - mu) ** 2)
            rows.append({
                "lambda": lam, "V": box.V, "mu": mu,
                "field_re": fld.real, "field_im": fld.imag,
                "mode_density": md, "shell_density": shell,
            })
    return rows


def _column(rows, lam, key):
    sub = [r for r in rows if r["lambda"] == lam]
    sub.sort(key=lambda r: r["V"])
    return (np.array([r["V"] for r in sub]),
            np.array([r[key] for r in sub]))


@dataclass
class QaLimits:
    """Double limits (V first, then lambda -> 0) of the sourced observables."""

    field: LimitEstimate
    field_squared: LimitEstimate
    mode_density: LimitEstimate
    shell_density: LimitEstimate
    rows: list = field(default_factory=list)


def bogoliubov_field(protocol: QaProtocol, spec: SumSpec = DEFAULT_SPEC,
                     rows=None) -> QaLimits:
    """Quasi-average limits in the Bogoliubov order: V -> infinity along the
    ladder at each fixed amplitude, then amplitude -> 0 by linear intercept."""
    if rows is None:
        rows = qa_table(protocol, spec)
    amps = sorted({r["lambda"] for r in rows})

    def limit_of(key):
        return double_limit(amps, lambda lam: _column(rows, lam, key),
                            window=protocol.window)

    return QaLimits(
        field=_modulus_limit(rows, amps, protocol.window),
        field_squared=_modulus_limit(rows, amps, protocol.window, squared=True),
        mode_density=limit_of("mode_density"),
        shell_density=limit_of("shell_density"),
        rows=rows,
    )


def _modulus_limit(rows, amps, window, squared=False):
    def inner(lam):
        V, re = _column(rows, lam, "field_re")
        _, im = _column(rows, lam, "field_im")
        mod = np.hypot(re, im)
        return V, mod**2 if squared else mod
    return double_limit(amps, inner, window=window)


@dataclass
class OrderReport:
    """The two orders of the (V, lambda) limit, computed from one table.

    ``bogoliubov`` sends V -> infinity first and recovers the square root of
    the condensate density; ``reversed_order`` sends lambda -> 0 first (using
    amplitudes far below the finite-volume gap scale ~ 1/(beta V rho_0)) and
    collapses to zero.
    """

    bogoliubov: LimitEstimate
    reversed_order: LimitEstimate
    rows: list = field(default_factory=list)


def order_sensitivity(protocol: QaProtocol, reversed_amplitudes,
                      spec: SumSpec = DEFAULT_SPEC) -> OrderReport:
    """Demonstrate non-commutation of the volume and source limits.

    One rectangular table is computed over the union of the protocol
    amplitudes and ``reversed_amplitudes``; the Bogoliubov branch reads the
    former, the reversed branch fits the lambda -> 0 intercept per volume over
    the latter and then drives the intercepts to V -> infinity.  The reversed
    amplitudes must sit well below 1/(beta V rho) for the largest box, or the
    per-volume intercept would still feel the condensate.
    """
    rev = sorted(reversed_amplitudes)
    rows = qa_table(protocol, spec,
                    amplitudes=sorted(set(protocol.amplitudes) | set(rev),
                                      reverse=True))
    bog = _modulus_limit(rows, sorted(protocol.amplitudes), protocol.window)

    inner = []
    for V in protocol.volumes:
        sub = sorted((r for r in rows if r["V"] == V and r["lambda"] in rev),
                     key=lambda r: r["lambda"])
        mods = [math.hypot(r["field_re"], r["field_im"]) for r in sub]
        inner.append(linear_intercept([r["lambda"] for r in sub], mods))
    x = [1.0 / V for V in reversed(protocol.volumes)]
    y = [b for b, _ in reversed(inner)]
    icpt, fit_err = linear_intercept(x, y)
    err = math.sqrt(fit_err**2 + sum(e * e for _, e in inner))
    return OrderReport(
        bogoliubov=bog,
        reversed_order=LimitEstimate(icpt, err, "double-limit"),
        rows=rows,
    )


@dataclass
class EquivalenceReport:
    """Cross-checks between the quasi-average and shell condensates.

    On a box that condenses non-extensively (no single macroscopic mode), the
    squared field modulus, the driven-mode density and the shell condensate
    density must all agree in the double limit, while the unsourced zero mode
    stays negligible; the field direction follows the source phase exactly
    and averages away over a phase sweep.
    """

    field_squared: LimitEstimate
    mode_density: LimitEstimate
    shell_density: LimitEstimate
    phase_equivariant: bool
    phase_average_modulus: float
    phase_table: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)


def equivalence_report(protocol: QaProtocol, spec: SumSpec = DEFAULT_SPEC,
                       tolerance: float = 0.02) -> EquivalenceReport:
    """Run the decorrelation experiment on the protocol's box family."""
    limits = bogoliubov_field(protocol, spec)
    fsq, md, sh = limits.field_squared, limits.mode_density, limits.shell_density

    # phase sweep at the reference corner (largest amplitude, largest box):
    # mu does not depend on the phase, so one solve serves all phases.  The
    # equivariance check rotates the phase-0 field, whose imaginary part is
    # exactly zero, so equality is required bit for bit.
    lam = max(protocol.amplitudes)
    box = BoxGeometry(max(protocol.volumes), protocol.alphas)
    mu = sourced_solve_mu(box, protocol.beta, protocol.rho,
                          protocol.source(lam), spec)
    base = qa_field(box, mu, SourceSpec(lam, 0.0, protocol.mode,
                                        protocol.wavevector))
    phases = [2.0 * math.pi * k / 8.0 for k in range(8)]
    sweep = [qa_field(box, mu, SourceSpec(lam, phi, protocol.mode,
                                          protocol.wavevector))
             for phi in phases]
    equivariant = all(f == base * cmath.exp(1j * phi)
                      for f, phi in zip(sweep, phases))
    avg_mod = abs(sum(sweep) / len(sweep))

    def rel(a, b):
        return abs(a - b) / max(abs(b), 1e-300)

    verdicts = {
        "field_sq_vs_mode_density": rel(fsq.value, md.value) <= tolerance,
        "field_sq_vs_shell": rel(fsq.value, sh.value) <= tolerance,
        "mode_density_vs_shell": rel(md.value, sh.value) <= tolerance,
        "phase_equivariant": equivariant,
        "phase_average_vanishes": avg_mod < max(fsq.error, 1e-12),
    }
    return EquivalenceReport(
        field_squared=fsq, mode_density=md, shell_density=sh,
        phase_equivariant=equivariant, phase_average_modulus=avg_mod,
        phase_table=[{"phase": phi, "field_re": f.real, "field_im": f.imag}
                     for phi, f in zip(phases, sweep)],
        verdicts=verdicts, rows=limits.rows,
    )
