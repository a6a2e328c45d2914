"""Power-law fitting and limit extrapolation shared by all experiment modules.

Three pieces of machinery live here: log-log power-law fits with an optional
multiplicative-logarithm correction, finite-volume sequence extrapolation of
the form f(V) = f_inf + c V^{-p}, and a double-limit driver that composes an
inner extrapolation with an outer linear intercept without ever interchanging
the configured order of limits.

Error bars are deliberately cheap and model-agnostic: leave-one-out half-ranges
for fits, and for extrapolations never less than the spread of the last two
grid values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

# Decay-exponent window for V^{-p} extrapolation.  Corrections decaying slower
# than V^{-0.3} are indistinguishable from non-convergence on desk-scale grids,
# and faster than V^{-1.5} from the limit itself; outside this window the
# fitted model is rejected in favour of the last-value fallback.
P_MIN = 0.3
P_MAX = 1.5


@dataclass(frozen=True)
class FitResult:
    """Outcome of a log-log power-law fit y ~ amplitude * x^{-exponent}."""

    exponent: float
    amplitude: float
    kappa: float          # coefficient of the log-log correction (0 if inactive)
    residual: float       # max |log y - model| over the fitted points
    stderr: float         # leave-one-out half-range of the exponent
    with_log: bool = False


@dataclass(frozen=True)
class LimitEstimate:
    """An extrapolated limit with an error bar and the model that produced it."""

    value: float
    error: float
    model: str            # "power-decay", "last-value", or "double-limit"
    p: float | None = None

    def __iter__(self):
        # convenience: value, error = estimate
        return iter((self.value, self.error))


class FitQualityError(RuntimeError):
    """A required fit rejected its input (non-convergent or degenerate)."""


def fit_power_law(x, y, with_log: bool = False) -> FitResult:
    """Least-squares fit of log y = A - gamma log x (- kappa log log x).

    Parameters
    ----------
    x, y : sequences of positive floats, x strictly increasing, len >= 4.
    with_log : include a multiplicative (log x)^{-kappa} correction; kappa is
        clamped to 0 (and the plain model refitted) if it comes out negative.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 4:
        raise ValueError("fit_power_law needs at least 4 points")
    if np.any(np.diff(x) <= 0):
        raise ValueError("x must be strictly increasing")
    if np.any(y <= 0):
        raise ValueError("y must be positive")
    lx, ly = np.log(x), np.log(y)

    def _solve(use_log):
        cols = [np.ones_like(lx), -lx]
        if use_log:
            cols.append(-np.log(lx))
        X = np.column_stack(cols)
        coef, *_ = np.linalg.lstsq(X, ly, rcond=None)
        resid = np.max(np.abs(ly - X @ coef))
        return X, coef, resid

    use_log = with_log
    X, coef, resid = _solve(use_log)
    if use_log and coef[2] < 0.0:
        use_log = False
        X, coef, resid = _solve(False)

    # leave-one-out half-range of the exponent
    loo = []
    for i in range(len(lx)):
        keep = np.ones(len(lx), dtype=bool)
        keep[i] = False
        c_i, *_ = np.linalg.lstsq(X[keep], ly[keep], rcond=None)
        loo.append(c_i[1])
    stderr = (max(loo) - min(loo)) / 2.0

    return FitResult(
        exponent=float(coef[1]),
        amplitude=float(math.exp(coef[0])),
        kappa=float(coef[2]) if use_log else 0.0,
        residual=float(resid),
        stderr=float(stderr),
        with_log=use_log,
    )


def _spread(y) -> float:
    return abs(y[-1] - y[-2]) if len(y) >= 2 else 0.0


def _extrapolate_exact3(V, y) -> LimitEstimate:
    """Exact 3-point solve of y = a + c V^{-p} on the last three points."""
    V, y = list(V)[-3:], list(y)[-3:]
    d1, d2 = y[0] - y[1], y[1] - y[2]
    spread = abs(y[2] - y[1])
    if d1 * d2 <= 0:  # non-monotone tail: no decaying model fits
        return LimitEstimate(y[-1], spread, "last-value")

    def resid(p):
        return (d1 / d2) - (V[0] ** -p - V[1] ** -p) / (V[1] ** -p - V[2] ** -p)

    try:
        p = brentq(resid, P_MIN, P_MAX, rtol=1e-12)
    except ValueError:  # no sign change: p outside the admissible window
        return LimitEstimate(y[-1], spread, "last-value")
    q = (V[1] / V[2]) ** p
    a = y[2] - d2 * q / (1.0 - q)
    err = max(abs(a - y[2]) / 2.0, spread, 1e-300)
    return LimitEstimate(float(a), float(err), "power-decay", p=float(p))


def extrapolate(V, f, window: int | None = None) -> LimitEstimate:
    """Extrapolate a finite-volume sequence to V -> infinity.

    Fits f(V) = f_inf + c V^{-p} with p free in [0.3, 1.5].  With
    ``window=3`` the fit is the exact solve through the last three points
    (the protocol used for quasi-average inner limits); otherwise it is a
    least-squares fit over the whole grid with p found by scan + refine.
    Falls back to the last value with the last-two-point spread as error
    whenever the model is degenerate or p lands on a window boundary.  The
    reported error bar is never below the last-two-point spread.
    """
    V = np.asarray(V, dtype=float)
    f = np.asarray(f, dtype=float)
    if len(V) < 3:
        raise ValueError("extrapolate needs at least 3 points")
    if np.any(np.diff(V) <= 0):
        raise ValueError("V must be strictly increasing")

    if window == 3 or len(V) == 3:
        return _extrapolate_exact3(V, f)
    if window is not None:
        V, f = V[-window:], f[-window:]

    spread = _spread(f)
    if np.allclose(f, f[0], rtol=0.0, atol=0.0):
        # exactly constant sequence: the limit is known with zero error
        return LimitEstimate(float(f[0]), 0.0, "power-decay", p=None)

    def ssr(p):
        X = np.column_stack([np.ones_like(V), V ** (-p)])
        coef, *_ = np.linalg.lstsq(X, f, rcond=None)
        r = f - X @ coef
        return float(np.dot(r, r)), coef

    best = None
    for p in np.linspace(P_MIN, P_MAX, 61):
        s, coef = ssr(p)
        if best is None or s < best[0]:
            best = (s, p, coef)
    _, p0, _ = best
    res = minimize_scalar(
        lambda q: ssr(q)[0],
        bounds=(max(P_MIN, p0 - 0.05), min(P_MAX, p0 + 0.05)),
        method="bounded",
    )
    p = float(res.x)
    s, coef = ssr(p)
    if p <= P_MIN + 1e-3 or p >= P_MAX - 1e-3:
        return LimitEstimate(float(f[-1]), max(spread, 1e-300), "last-value")
    # error proxy: size of the fitted correction one grid step inside the
    # tail, inflated by the residual level
    err = max(abs(coef[1]) * V[-2] ** (-p), math.sqrt(s / len(V)), spread)
    return LimitEstimate(float(coef[0]), float(err), "power-decay", p=p)


def linear_intercept(x, y) -> tuple[float, float]:
    """Least-squares linear fit y = a + b x; returns (a, leave-one-out error).

    This is the outer-limit model of every double limit here: the quantity is
    linear in the source amplitude (or field) near zero, so the x -> 0 limit
    is the fitted intercept.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    X = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    if len(x) < 3:
        return float(coef[0]), abs(y[-1] - y[-2])
    loo = []
    for i in range(len(x)):
        keep = np.ones(len(x), dtype=bool)
        keep[i] = False
        c_i, *_ = np.linalg.lstsq(X[keep], y[keep], rcond=None)
        loo.append(c_i[0])
    return float(coef[0]), float((max(loo) - min(loo)) / 2.0)


def double_limit(outer_grid, inner_evaluator, window: int | None = 3) -> LimitEstimate:
    """Compose an inner V -> infinity extrapolation with an outer linear intercept.

    ``inner_evaluator(o)`` must return ``(V_sequence, f_sequence)`` for the
    outer-grid point ``o``.  For each outer point the inner sequence is
    extrapolated first; the outer limit is then the linear intercept of the
    inner limits over the outer grid, taken toward 0.  The order is fixed by
    construction and never interchanged.  The error combines all inner error
    bars and the outer fit error in quadrature.
    """
    outer = list(outer_grid)
    inner = []
    for o in outer:
        V_seq, f_seq = inner_evaluator(o)
        inner.append(extrapolate(V_seq, f_seq, window=window))
    icpt, fit_err = linear_intercept(outer, [e.value for e in inner])
    err = math.sqrt(fit_err**2 + sum(e.error**2 for e in inner))
    return LimitEstimate(float(icpt), float(err), "double-limit")
