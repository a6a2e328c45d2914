"""Self-consistent phonon model of a displacive structural transition.

A scalar displacement field on a d-dimensional lattice is closed in the
self-consistent (one-loop) approximation: every phonon sees a uniform gap
Delta = Delta(c) determined by the mean squared displacement c, and c in turn
is the Brillouin-zone average of the gapped propagator,

    c = (2 pi)^{-d} int_BZ (lam / 2 Omega_q) coth(lam Omega_q / 2 T) dq,
    Omega_q = sqrt(Delta + omega_q^2),
    omega_q^2 = J (4 sum_j sin^2(q_j / 2))^{sigma / 2}.

``lam`` is the quantum coupling: lam -> 0 is the classical crystal, and a
large lam destroys the ordered phase even at T = 0.  Since the gap function is
strictly increasing with Delta(c*) = 0, the self-consistency has a unique
solution with a positive gap as long as the zone average at Delta = 0 exceeds
c* (phase A).  Once it falls to c* or below (phase B) the displacement
variable sticks at c* and the leftover weight

    rho = c* - I(Delta = 0)

condenses into a macroscopic ordered displacement.  At finite volume, or under
a symmetry-breaking field h, the equation always has a smooth solution with
Delta > 0; the ordered phase emerges only through the limits, which is what
the drivers in :mod:`condlab.fluctuations` exploit.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import nquad, quad
from scipy.optimize import brentq

from .asymptotics import LimitEstimate, linear_intercept

__all__ = [
    "DivergenceError",
    "ScpParams",
    "ScpSolution",
    "MixingWeight",
    "gap",
    "c_star",
    "omega_sq",
    "brillouin_integral",
    "brillouin_sum",
    "stiffness",
    "lambda_c",
    "solve_c",
    "ordered_density",
    "critical_line",
    "critical_line_table",
    "displacement_qa",
    "mixing_weight",
]


class DivergenceError(RuntimeError):
    """The requested zone average diverges (gapless infrared at sigma >= d)."""


@dataclass(frozen=True)
class ScpParams:
    """Model constants: dispersion exponent sigma, lattice dimension d,
    stiffness J, gap-function parameters (a, b, eta), quantum coupling lam."""

    sigma: float
    d: int = 1
    J: float = 1.0
    a: float = 1.0
    b: float = 4.0
    eta: float = 1.0
    lam: float = 1.0
    family: str = "exp"

    def __post_init__(self):
        if not 0.0 < self.sigma < 2.0:
            raise ValueError("sigma must lie in (0, 2)")
        if self.d < 1:
            raise ValueError("d must be a positive integer")
        if self.J <= 0:
            raise ValueError("J must be positive")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.family == "exp":
            if min(self.a, self.b, self.eta) <= 0:
                raise ValueError("the exponential gap family needs a, b, eta > 0")
            if self.b * self.eta <= self.a:
                raise ValueError("need b eta > a so the gap has a positive zero")
        elif self.family == "quartic":
            if self.a >= 0 or self.b <= 0:
                raise ValueError("the quartic gap family needs a < 0 < b")
        else:
            raise ValueError(f"unknown gap family {self.family!r}")

    def replace(self, **kw) -> "ScpParams":
        return dataclasses.replace(self, **kw)


def gap(c: float, params: ScpParams) -> float:
    """Self-consistent squared phonon gap Delta(c); strictly increasing."""
    if params.family == "exp":
        return params.a - params.b * params.eta * math.exp(-params.eta * c)
    return params.a + 2.0 * params.b * c


def c_star(params: ScpParams) -> float:
    """The unique zero of the gap function (closed form)."""
    if params.family == "exp":
        return math.log(params.b * params.eta / params.a) / params.eta
    return -params.a / (2.0 * params.b)


def omega_sq(q, params: ScpParams):
    """Bare dispersion omega_q^2 = J (4 sum_j sin^2(q_j/2))^{sigma/2}.

    ``q`` is a scalar or 1-d array for d = 1, else an array whose last axis
    runs over the d components.
    """
    q = np.asarray(q, dtype=float)
    if params.d == 1:
        s = 4.0 * np.sin(q / 2.0) ** 2
    else:
        s = np.sum(4.0 * np.sin(q / 2.0) ** 2, axis=-1)
    return params.J * s ** (params.sigma / 2.0)


def _occupancy(omega2, delta: float, T: float, lam: float):
    """Integrand (lam / 2 Omega) coth(lam Omega / 2 T) of the zone average."""
    Om = np.sqrt(delta + omega2)
    if T == 0.0:
        return lam / (2.0 * Om)
    return lam / (2.0 * Om * np.tanh(lam * Om / (2.0 * T)))


def brillouin_integral(delta: float, T: float, params: ScpParams) -> float:
    """Infinite-volume zone average I(Delta, T) of the gapped propagator.

    Diverges when the spectrum is gapless (Delta = 0) and the thermal
    occupation turns the infrared weight into dq / q^sigma with sigma >= d;
    that case raises :class:`DivergenceError` instead of returning garbage.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if T < 0:
        raise ValueError("T must be nonnegative")
    if delta == 0.0:
        if T > 0.0 and params.sigma >= params.d:
            raise DivergenceError(
                "thermal zone average diverges at zero gap for sigma >= d")
        if T == 0.0 and params.sigma >= 2.0 * params.d:
            raise DivergenceError(
                "ground-state zone average diverges at zero gap")

    lam = params.lam
    if params.d == 1:
        val, err = quad(
            lambda q: _occupancy(omega_sq(q, params), delta, T, lam),
            0.0, math.pi, points=[1e-8, 1e-4, 1e-2],
            limit=400, epsabs=1e-13, epsrel=1e-11)
        val /= math.pi
        err /= math.pi
    else:
        def f(*q):
            return _occupancy(omega_sq(np.array(q), params), delta, T, lam)
        val, err = nquad(f, [(0.0, math.pi)] * params.d,
                         opts={"limit": 200, "epsabs": 1e-11, "epsrel": 1e-9})
        val /= math.pi ** params.d
        err /= math.pi ** params.d
    if not math.isfinite(val) or err > 1e-8 * max(abs(val), 1.0):
        raise RuntimeError("zone-average quadrature did not converge")
    return float(val)


@lru_cache(maxsize=8)
def _omega_sq_grid(d: int, sigma: float, J: float, V: int):
    params = ScpParams(sigma=sigma, d=d, J=J)
    if d == 1:
        q = 2.0 * math.pi * np.arange(V) / V
        return omega_sq(q, params)
    L = round(V ** (1.0 / d))
    if L**d != V:
        raise ValueError("finite-volume sums need V = L^d with integer L")
    q1 = 2.0 * math.pi * np.arange(L) / L
    grids = np.meshgrid(*([q1] * d), indexing="ij")
    s = sum(4.0 * np.sin(g / 2.0) ** 2 for g in grids)
    return (J * s ** (sigma / 2.0)).ravel()


def brillouin_sum(delta: float, T: float, V: int, params: ScpParams) -> float:
    """Finite-volume zone average: the sum over q_j = 2 pi n_j / L including
    the q = 0 mode, whose frequency is sqrt(Delta) alone.  Needs Delta > 0."""
    if delta <= 0:
        raise ValueError("the finite-volume sum needs a positive gap")
    om2 = _omega_sq_grid(params.d, params.sigma, params.J, int(V))
    vals = _occupancy(om2, delta, T, params.lam)
    return float(np.sum(vals)) / V


def stiffness(params: ScpParams, method: str = "adaptive") -> float:
    """Zone average K = (2 pi)^{-d} int dq / (2 omega_q), the T = 0 gapless
    propagator weight per unit quantum coupling.

    Two independent quadratures are provided for d = 1: ``adaptive`` (the
    generic routine with singular-endpoint hints) and ``gauss`` (the
    substitution q = u^{2/(2 - sigma)}, which removes the q^{-sigma/2}
    endpoint singularity exactly, followed by 200-point Gauss-Legendre).
    """
    unit = params.replace(lam=1.0)
    if method == "adaptive":
        return brillouin_integral(0.0, 0.0, unit)
    if method != "gauss":
        raise ValueError(f"unknown method {method!r}")
    if params.d != 1:
        raise ValueError("the Gauss-Legendre variant is implemented for d = 1")
    s = params.sigma
    p = 2.0 / (2.0 - s)
    U = math.pi ** (1.0 / p)
    nodes, weights = np.polynomial.legendre.leggauss(200)
    u = 0.5 * U * (nodes + 1.0)
    q = u**p
    g = p * u ** (p - 1.0) / (2.0 * np.sqrt(omega_sq(q, unit)))
    return float(np.sum(weights * g) * 0.5 * U / math.pi)


def lambda_c(params: ScpParams, method: str = "adaptive") -> float:
    """Quantum critical coupling: lam_c K = c*, the T = 0 melting point."""
    return c_star(params) / stiffness(params, method)


@dataclass
class ScpSolution:
    """One solved self-consistency point.

    ``rho`` is the ordered (coherent) density h^2/Delta^2 when a field is
    applied, the condensate c* - I at the infinite-volume, zero-field B phase,
    and 0 in phase A; ``zero_mode`` is the thermal weight of the q = 0 phonon
    at finite volume, which carries the remainder of the order there.
    """

    c: float
    Delta: float
    rho: float
    Q_expect: float
    phase: str
    T: float
    h: float
    V: int | None
    zero_mode: float = 0.0


def _solve_branch(rhs, cs: float):
    """Root of c = rhs(c) on c > c*, where rhs is decreasing in c."""
    def F(c):
        return c - rhs(c)

    lo = cs + 1e-14
    for _ in range(40):
        if F(lo) < 0.0:
            break
        lo = cs + (lo - cs) * 0.1
    else:
        raise RuntimeError("self-consistency bracket failed near c*")
    hi = cs + 1.0
    while F(hi) <= 0.0:
        hi = cs + 2.0 * (hi - cs)
        if hi > cs + 1e12:
            raise RuntimeError("self-consistency bracket failed at large c")
    return float(brentq(F, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=300))


def solve_c(V: int | None, T: float, h: float, params: ScpParams) -> ScpSolution:
    """Solve the self-consistency for c at volume V (None = infinite),
    temperature T and symmetry-breaking field h.

    The equation is c = I(Delta(c)) + h^2 / Delta(c)^2 with I the zone
    average (integral or lattice sum).  At V = None, h = 0 the phase is
    resolved exactly: B (gap closed, condensate c* - I) when the gapless
    average stays at or below c*, A (positive gap, no order) otherwise.
    """
    if h < 0:
        raise ValueError("h must be nonnegative (the phase is carried separately)")
    cs = c_star(params)

    if V is None and h == 0.0:
        try:
            i_star = brillouin_integral(0.0, T, params)
        except DivergenceError:
            i_star = math.inf
        if i_star <= cs:
            return ScpSolution(c=cs, Delta=0.0, rho=cs - i_star, Q_expect=0.0,
                               phase="B", T=T, h=0.0, V=None)
        c = _solve_branch(lambda c: brillouin_integral(gap(c, params), T, params), cs)
        return ScpSolution(c=c, Delta=gap(c, params), rho=0.0, Q_expect=0.0,
                           phase="A", T=T, h=0.0, V=None)

    if V is None:
        def rhs(c):
            d = gap(c, params)
            return brillouin_integral(d, T, params) + h * h / (d * d)
    else:
        def rhs(c):
            d = gap(c, params)
            return brillouin_sum(d, T, int(V), params) + h * h / (d * d)

    c = _solve_branch(rhs, cs)
    d = gap(c, params)
    zero = 0.0
    if V is not None:
        zero = float(_occupancy(np.array(0.0), d, T, params.lam)) / V
    return ScpSolution(c=c, Delta=d, rho=h * h / (d * d),
                       Q_expect=h / d, phase="finite" if V is not None else "A",
                       T=T, h=h, V=None if V is None else int(V),
                       zero_mode=zero)


def ordered_density(T: float, params: ScpParams) -> float:
    """Condensed displacement density rho_{c*} = c* - I(0, T) in phase B."""
    cs = c_star(params)
    rho = cs - brillouin_integral(0.0, T, params)
    if rho < 0:
        raise ValueError("the point (T, params) lies in phase A")
    return rho


def critical_line(lam: float, params: ScpParams) -> float:
    """Transition temperature T_c(lam): the root of I(0, T) = c*.

    The zone average at zero gap increases with T, so the root is unique;
    couplings at or beyond the quantum critical point return T_c = 0.
    """
    if params.sigma >= params.d:
        # any T > 0 diverges at zero gap: ordering only at exactly T = 0
        return 0.0
    p = params.replace(lam=lam)
    cs = c_star(p)

    def g(T):
        return brillouin_integral(0.0, T, p) - cs

    t_floor = 1e-12
    if g(t_floor) >= 0.0:
        return 0.0
    hi = 1.0
    while g(hi) < 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("no transition temperature below 1e12")
    return float(brentq(g, t_floor, hi, rtol=1e-13, maxiter=200))


def critical_line_table(lams, params: ScpParams) -> list[dict]:
    """CSV-ready (lambda, T_c) rows along a coupling grid."""
    return [{"lambda": float(lam), "T_c": critical_line(float(lam), params)}
            for lam in lams]


def displacement_qa(T: float, lam: float, params: ScpParams,
                    sign: int = 1,
                    h_grid=(1e-2, 3e-3, 1e-3, 3e-4, 1e-4)):
    """Quasi-average of the displacement in phase B: solve at small fields h,
    form Q(h) = h / Delta, and take the h -> 0 linear intercept.  The limit is
    sign * sqrt(rho_{c*}); the two signs label the two pure ordered states.

    Returns (estimate, rows) with one solved row per field value.
    """
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    p = params.replace(lam=lam)
    hs = sorted(h_grid)
    rows = []
    for h in hs:
        sol = solve_c(None, T, h, p)
        rows.append({"h": h, "c": sol.c, "Delta": sol.Delta,
                     "Q_expect": sign * sol.Q_expect})
    icpt, err = linear_intercept(hs, [r["Q_expect"] for r in rows])
    return LimitEstimate(icpt, err, "power-decay"), rows


@dataclass(frozen=True)
class MixingWeight:
    """Decomposition weight of the symmetric state under a scaled field.

    Under a field hhat / V^alpha the limiting state is a *mixture*
    a . (+ phase) + (1 - a) . (- phase) exactly at the critical scaling
    alpha = 1, where a = (1 + hhat / (xi sqrt(rho))) / 2 with xi the positive
    root of xi^2 - xi/(beta rho) - hhat^2/rho = 0.  Faster decay (alpha > 1)
    leaves the even mixture, slower decay (alpha < 1) selects the pure state.
    """

    a: float
    xi: float
    alpha: float
    hhat: float


def mixing_weight(hhat: float, alpha: float, beta: float,
                  rho: float) -> MixingWeight:
    """Mixture weight of the + phase for field scaling hhat / V^alpha."""
    if beta <= 0 or rho <= 0:
        raise ValueError("beta and rho must be positive")
    if hhat < 0:
        raise ValueError("hhat must be nonnegative")
    x = 1.0 / (2.0 * beta * rho)
    xi = x + math.sqrt(x * x + hhat * hhat / rho)
    resid = abs(xi * xi - xi / (beta * rho) - hhat * hhat / rho)
    if resid > 1e-10 * max(xi * xi, 1.0):
        raise RuntimeError("mixing-weight root failed verification")
    if alpha < 1.0:
        a = 1.0 if hhat > 0 else 0.5
    elif alpha == 1.0:
        a = 0.5 * (1.0 + hhat / (xi * math.sqrt(rho)))
    else:
        a = 0.5
    return MixingWeight(a=a, xi=xi, alpha=alpha, hhat=hhat)
