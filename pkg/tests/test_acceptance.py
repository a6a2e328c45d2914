"""End-to-end acceptance checks for the whole laboratory.

Each test prints one PASS/FAIL line with the measured numbers so a full run
doubles as a scoreboard.  Expensive ladders are computed once per module and
shared between the criteria that consume them.  Tolerances are asserted
exactly as stated; a check the fixed ladders cannot meet fails visibly
rather than being loosened.
"""

import math
import time

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.special import zeta

from condlab import (
    BoxGeometry,
    QaProtocol,
    ScpParams,
    bogoliubov_field,
    c_star,
    casimir_root,
    critical_density,
    critical_line,
    below_line_point,
    default_instances,
    double_limit,
    extrapolate,
    finite_volume_critical_density,
    gap_exponent_scan,
    gbec_shell_density,
    lambda_c,
    mixing_weight,
    operating_point,
    order_sensitivity,
    ordered_density,
    equivalence_report,
    solve_c,
    solve_mu,
    stiffness,
)

BETA = 1.0
RHO_C = 0.05864362134764442


def _check(tag: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}")
    assert ok, f"{tag}: {detail}"


# ---------------------------------------------------------------------------
# shared ladders


@pytest.fixture(scope="module")
def gbec_reports():
    """Unsourced condensation ladders for the three box shapes."""
    volumes = (1e4, 3e4, 1e5, 3e5, 1e6, 3e6)
    deltas = (0.25, 0.1, 0.05)
    rho = 2 * RHO_C
    out = {}
    t0 = time.time()
    for label, alphas in (("I", (1 / 3, 1 / 3, 1 / 3)),
                          ("II", (0.5, 0.25, 0.25)),
                          ("III", (0.6, 0.2, 0.2))):
        boxes = [BoxGeometry(V, alphas) for V in volumes]
        out[label] = gbec_shell_density(boxes, BETA, rho, deltas)
    out["elapsed"] = time.time() - t0
    return out


@pytest.fixture(scope="module")
def qa_order():
    """One rectangular (V, lambda) table read in both limit orders."""
    protocol = QaProtocol(
        alphas=(1 / 3, 1 / 3, 1 / 3), beta=BETA, rho=2 * RHO_C,
        volumes=(1e5, 3e5, 1e6), amplitudes=(1e-3, 3e-4, 1e-4))
    return order_sensitivity(protocol, reversed_amplitudes=(1e-6, 3e-7, 1e-7))


@pytest.fixture(scope="module")
def qa_equiv():
    """Sourced run on the box that condenses without a macroscopic mode."""
    protocol = QaProtocol(
        alphas=(0.6, 0.2, 0.2), beta=BETA, rho=2 * RHO_C,
        volumes=(1e5, 3e5, 1e6), amplitudes=(1e-2, 3e-3, 1e-3), phase=0.7)
    return equivalence_report(protocol)


@pytest.fixture(scope="module")
def fluct_scans():
    """Twelve exponent ladders; operating points shared per (point, sigma)."""
    t0 = time.time()
    scans = {}
    for point in ("critical-line", "quantum"):
        for sigma in sorted({s for s, _ in default_instances(point)}):
            params = ScpParams(sigma=sigma)
            lam, T = operating_point(point, params)
            for s, alpha in default_instances(point):
                if s == sigma:
                    scans[(point, sigma, alpha)] = gap_exponent_scan(
                        point, params, alpha, lam=lam, T=T)
    scans["elapsed"] = time.time() - t0
    return scans


@pytest.fixture(scope="module")
def below_reports():
    """Ordered-phase quasi-averages at three field scalings (sigma = 0.4)."""
    params = ScpParams(sigma=0.4)
    lam, T = operating_point("below", params)
    return {alpha: below_line_point(params, alpha, lam=lam, T=T)
            for alpha in (0.5, 1.0, 2.0)}


# ---------------------------------------------------------------------------
# criterion 1: critical density


def test_c1_critical_density_quadrature():
    t0 = time.time()
    rc = critical_density(BETA)
    closed = float(zeta(1.5)) * (4 * math.pi) ** -1.5
    rel = abs(rc - closed) / closed
    elapsed = time.time() - t0
    _check("criterion 1a", rel <= 1e-6 and elapsed < 10.0,
           f"rho_c = {rc:.9f} vs zeta(3/2)(4 pi)^-3/2 = {closed:.9f} "
           f"(rel {rel:.2e}, {elapsed:.2f} s)")


def test_c1_finite_volume_cubic_sum():
    t0 = time.time()
    volumes = (1e4, 1e5, 1e6)
    vals = [finite_volume_critical_density(BoxGeometry.cubic(V), BETA)
            for V in volumes]
    est = extrapolate(np.array(volumes), np.array(vals))
    rel = abs(est.value - RHO_C) / RHO_C
    raw = vals[-1] / RHO_C
    elapsed = time.time() - t0
    # the raw lattice sum at V = 1e6 sits 1/L below the bulk value by the
    # zero-mode exclusion; the ladder limit removes that known deficit
    _check("criterion 1b", rel <= 0.02 and elapsed < 10.0,
           f"cubic-sum limit {est.value:.6f} vs {RHO_C:.6f} (rel {rel:.2e}; "
           f"raw V=1e6 ratio {raw:.4f}; {elapsed:.1f} s)")


# ---------------------------------------------------------------------------
# criterion 2: condensation type table


def test_c2_classifier_types(gbec_reports):
    kinds = {label: gbec_reports[label].kind for label in ("I", "II", "III")}
    ok = kinds == {"I": "I", "II": "II", "III": "III"}
    _check("criterion 2a", ok and gbec_reports["elapsed"] < 600.0,
           f"classified {kinds} ({gbec_reports['elapsed']:.0f} s)")


@pytest.mark.parametrize("label", ["I", "II", "III"])
def test_c2_shell_density(gbec_reports, label):
    rep = gbec_reports[label]
    rho0 = rep.rho - rep.rho_c
    rel = abs(rep.shell_estimate.value - rho0) / rho0
    _check(f"criterion 2b[{label}]", rel <= 0.02,
           f"shell {rep.shell_estimate.value:.6f} +- {rep.shell_estimate.error:.1e} "
           f"vs rho-rho_c {rho0:.6f} (rel {rel:.3%})")


def test_c2_casimir_zero_mode(gbec_reports):
    rep = gbec_reports["II"]
    root = casimir_root(BETA, rep.rho)
    zm = rep.zero_mode.value
    rel = abs(zm - root.zero_mode_density) / root.zero_mode_density
    _check("criterion 2c", rel <= 0.03,
           f"zero-mode {zm:.6f} vs 1/(beta A) = "
           f"{root.zero_mode_density:.6f} (rel {rel:.3%})")


# ---------------------------------------------------------------------------
# criterion 3: saturation asymptotics of the chemical potential


def test_c3_unsourced_gap_product():
    volumes = np.array([1e5, 3e5, 1e6])
    rho = 2 * RHO_C
    rho0 = rho - RHO_C
    prods = [BETA * V * rho0 * (-solve_mu(BoxGeometry.cubic(V), BETA, rho))
             for V in volumes]
    est = extrapolate(volumes, prods)
    _check("criterion 3a", abs(est.value - 1.0) <= 0.02,
           f"beta V (rho-rho_c) |mu| -> {est.value:.5f} +- {est.error:.1e}")


def test_c3_sourced_mu_ratio(qa_order):
    rows = [r for r in qa_order.rows if r["lambda"] >= 1e-4]
    amps = sorted({r["lambda"] for r in rows})
    rho0 = math.sqrt(2 * RHO_C - RHO_C)

    def inner(lam):
        sub = sorted((r for r in rows if r["lambda"] == lam),
                     key=lambda r: r["V"])
        V = np.array([r["V"] for r in sub])
        ratio = np.array([(-r["mu"]) * rho0 / lam for r in sub])
        return V, ratio

    est = double_limit(amps, inner)
    _check("criterion 3b", abs(est.value - 1.0) <= 0.02,
           f"|mu| sqrt(rho-rho_c) / lambda -> {est.value:.5f} +- {est.error:.1e}")


# ---------------------------------------------------------------------------
# criterion 4: quasi-average equivalence on the alpha_1 = 0.6 box


def test_c4_field_squared_vs_mode_density(qa_equiv):
    f2, md = qa_equiv.field_squared.value, qa_equiv.mode_density.value
    rel = abs(f2 - md) / md
    _check("criterion 4a", rel <= 0.02,
           f"|field|^2 {f2:.6f} vs driven-mode density {md:.6f} (rel {rel:.3%})")


def test_c4_field_squared_vs_gbec(qa_equiv, gbec_reports):
    f2 = qa_equiv.field_squared.value
    shell = gbec_reports["III"].shell_estimate.value
    rel = abs(f2 - shell) / shell
    _check("criterion 4b", rel <= 0.02,
           f"|field|^2 {f2:.6f} vs gBEC shell {shell:.6f} (rel {rel:.3%})")


def test_c4_mode_density_vs_gbec(qa_equiv, gbec_reports):
    md = qa_equiv.mode_density.value
    shell = gbec_reports["III"].shell_estimate.value
    rel = abs(md - shell) / shell
    _check("criterion 4c", rel <= 0.02,
           f"driven-mode density {md:.6f} vs gBEC shell {shell:.6f} "
           f"(rel {rel:.3%})")


def test_c4_unsourced_zero_mode_negligible(gbec_reports):
    rep = gbec_reports["III"]
    zm = rep.zero_mode.value
    bound = 1e-3 * rep.rho
    _check("criterion 4d", zm < bound,
           f"lambda=0 zero-mode density {zm:.3e} vs 1e-3 rho = {bound:.3e}")


def test_c4_phase_equivariance(qa_equiv):
    _check("criterion 4e", qa_equiv.phase_equivariant,
           "field rotates with the source phase exactly "
           f"({len(qa_equiv.phase_table)} phases checked bitwise)")


def test_c4_phase_average_vanishes(qa_equiv):
    avg = qa_equiv.phase_average_modulus
    err = qa_equiv.field_squared.error
    _check("criterion 4f", avg < math.sqrt(max(err, 1e-30)),
           f"phase-averaged field modulus {avg:.2e} "
           f"(fit error scale {math.sqrt(err):.2e})")


# ---------------------------------------------------------------------------
# criterion 5: source on a mode with positive limiting energy


@pytest.fixture(scope="module")
def case_i_limits():
    k1 = 2 * math.pi / 25.0
    protocol = QaProtocol(
        alphas=(1 / 3, 1 / 3, 1 / 3), beta=BETA, rho=2 * RHO_C,
        volumes=(15625.0, 125000.0, 1e6), amplitudes=(1e-3, 3e-4, 1e-4),
        wavevector=(k1, 0.0, 0.0))
    return bogoliubov_field(protocol)


def test_c5_field_vanishes(case_i_limits):
    rho = 2 * RHO_C
    bound = 1e-3 * math.sqrt(rho)
    val = abs(case_i_limits.field.value)
    _check("criterion 5a", val < bound,
           f"|<b_q>/sqrt(V)| -> {val:.2e} < 1e-3 sqrt(rho) = {bound:.2e}")


def test_c5_mode_density_vanishes(case_i_limits):
    rho = 2 * RHO_C
    val = abs(case_i_limits.mode_density.value)
    _check("criterion 5b", val < 1e-3 * rho,
           f"driven-mode density -> {val:.2e} < 1e-3 rho = {1e-3 * rho:.2e}")


# ---------------------------------------------------------------------------
# criterion 6: closed-form mixing root


def test_c6_numeric_root_grid():
    worst = 0.0
    for beta in (0.5, 1.0, 2.0):
        for rho in (0.05, 0.1, 0.5):
            for hhat in (0.0, 0.05, 0.2):
                xi = mixing_weight(hhat, 1.0, beta, rho).xi
                w = brentq(lambda w: hhat**2 / w**2 + 1.0 / (beta * w) - rho,
                           1e-8, 1e8, rtol=8.9e-16)
                worst = max(worst, abs(w - xi) / xi)
    _check("criterion 6a", worst <= 1e-10,
           f"27-point grid: worst |w - xi|/xi = {worst:.2e}")


def test_c6_zero_field_weight_exact():
    a = mixing_weight(0.0, 1.0, 1.0, 0.1).a
    _check("criterion 6b", a == 0.5, f"a(hhat=0) = {a!r} (exact half)")


# ---------------------------------------------------------------------------
# criterion 7: displacive phase structure at sigma = 0.5


def test_c7_c_star():
    err = abs(c_star(ScpParams(sigma=0.5)) - math.log(4.0))
    _check("criterion 7a", err <= 1e-12, f"|c* - ln 4| = {err:.2e}")


def test_c7_lambda_c_cross_quadrature():
    p = ScpParams(sigma=0.5)
    ka, kg = stiffness(p, "adaptive"), stiffness(p, "gauss")
    rel = abs(ka - kg) / ka
    lc = lambda_c(p)
    _check("criterion 7b", rel <= 1e-6,
           f"lambda_c = c*/K = {lc:.6f}; quadratures differ by {rel:.2e}")


def test_c7_critical_line_melts():
    p = ScpParams(sigma=0.5)
    lc = lambda_c(p)
    lams = [0.25 * lc, 0.5 * lc, 0.75 * lc, 0.9 * lc, lc]
    tcs = [critical_line(lam, p) for lam in lams]
    dec = all(a > b for a, b in zip(tcs, tcs[1:]))
    _check("criterion 7c", dec and tcs[-1] < 1e-6,
           f"T_c strictly decreasing {['%.4f' % t for t in tcs]}, "
           f"T_c(lambda_c) = {tcs[-1]:.2e}")


def test_c7_ordered_phase_identity():
    p = ScpParams(sigma=0.5)
    lam = lambda_c(p) / 2
    tc = critical_line(lam, p)
    pl = p.replace(lam=lam)
    target = ordered_density(tc / 2, pl)
    sol = solve_c(None, tc / 2, 1e-4, pl)
    rel = abs(sol.rho - target) / target
    _check("criterion 7d", rel <= 0.01,
           f"h^2/Delta^2 at h=1e-4: {sol.rho:.6f} vs c* - I = {target:.6f} "
           f"(rel {rel:.3%})")


# ---------------------------------------------------------------------------
# criterion 8: exponent tables and limit algebras


def test_c8_gamma_critical_line(fluct_scans):
    bad = []
    for sigma, alpha in default_instances("critical-line"):
        scan = fluct_scans[("critical-line", sigma, alpha)]
        if abs(scan.gamma.exponent - scan.prediction.gamma) > 0.05:
            bad.append((sigma, alpha, scan.gamma.exponent,
                        scan.prediction.gamma))
    _check("criterion 8a", not bad,
           "6 thermal-line instances within +-0.05"
           + (f"; misses: {bad}" if bad else ""))


def test_c8_gamma_quantum(fluct_scans):
    bad = []
    for sigma, alpha in default_instances("quantum"):
        scan = fluct_scans[("quantum", sigma, alpha)]
        if abs(scan.gamma.exponent - scan.prediction.gamma) > 0.05:
            bad.append((sigma, alpha, scan.gamma.exponent,
                        scan.prediction.gamma))
    _check("criterion 8b", not bad,
           "6 quantum instances within +-0.05"
           + (f"; misses: {bad}" if bad else ""))


def test_c8_delta_exponents(fluct_scans):
    bad = []
    for key, scan in fluct_scans.items():
        if key == "elapsed":
            continue
        dq_err = abs(scan.delta_Q[0] - scan.predicted_delta[0])
        dp_err = abs(scan.delta_P[0] - scan.predicted_delta[1])
        if dq_err > 0.03 or dp_err > 0.03:
            bad.append((key, scan.delta_Q[0], scan.delta_P[0]))
    _check("criterion 8c", not bad,
           "variance exponents delta_Q, delta_P within +-0.03 on all 12"
           + (f"; misses: {bad}" if bad else ""))


def test_c8_algebra_verdicts(fluct_scans):
    bad = []
    for key, scan in fluct_scans.items():
        if key == "elapsed":
            continue
        expected = "abelian" if key[0] == "critical-line" else "non-abelian"
        if scan.algebra != expected:
            bad.append((key, scan.algebra))
    elapsed = fluct_scans["elapsed"]
    _check("criterion 8d", not bad and elapsed < 600.0,
           f"abelian on the thermal line, non-abelian at (0, lambda_c) "
           f"({elapsed:.0f} s for 12 ladders)"
           + (f"; misses: {bad}" if bad else ""))


# ---------------------------------------------------------------------------
# criterion 9: quasi-averages below the critical line


def test_c9_alpha_half_saturates(below_reports):
    rep = below_reports[0.5]
    dq = rep.scan.delta_Q[0]
    dp = rep.scan.delta_P[0]
    ok = abs(dq - 0.25) <= 0.03 and abs(dp) <= 0.03
    _check("criterion 9a", ok,
           f"alpha=0.5: delta_Q = {dq:+.4f} (target 0.25), "
           f"delta_P = {dp:+.4f} (target 0)")


def test_c9_alpha_one_mixed_state(below_reports):
    rep = below_reports[1.0]
    q = rep.Q_limit.value
    pred = rep.Q_predicted
    cap = math.sqrt(rep.rho_ordered)
    ok = (abs(q - pred) / pred <= 0.01 and q < cap
          and abs(rep.w_estimate.value - rep.w_predicted)
          / rep.w_predicted <= 0.01)
    _check("criterion 9b", ok,
           f"alpha=1: <Q> -> {q:.6f} vs hhat/w = {pred:.6f}, "
           f"below sqrt(rho) = {cap:.6f}; "
           f"w {rep.w_estimate.value:.6f} vs {rep.w_predicted:.6f}")


def test_c9_alpha_two_restores(below_reports):
    rep = below_reports[2.0]
    q = rep.Q_limit
    dq = rep.scan.delta_Q[0]
    ok = abs(q.value) <= max(3 * q.error, 1e-6) and abs(dq - 0.5) <= 0.03
    _check("criterion 9c", ok,
           f"alpha=2: <Q> -> {q.value:.2e} +- {q.error:.1e}, "
           f"delta_Q = {dq:+.4f} (target 0.5)")


# ---------------------------------------------------------------------------
# criterion 10: the two limit orders disagree as required


def test_c10_order_sensitivity(qa_order):
    rho0 = RHO_C  # 2 rho_c - rho_c
    target = math.sqrt(rho0)
    bog = qa_order.bogoliubov
    rev = qa_order.reversed_order
    ok = (abs(bog.value - target) / target <= 0.02
          and abs(rev.value) <= max(3 * rev.error, 1e-2 * bog.value))
    _check("criterion 10", ok,
           f"V-first: {bog.value:.6f} (sqrt(rho-rho_c) = {target:.6f}); "
           f"lambda-first: {rev.value:.2e} +- {rev.error:.1e}; "
           "both from one table")
