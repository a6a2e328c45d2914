"""Ideal-gas critical density, saturation chemistry, and the diagonal model."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import zeta

from condlab import (
    BoxGeometry,
    casimir_root,
    classify_gbec,
    critical_density,
    diagonal_model_density,
    diagonal_solve_mu,
    finite_volume_critical_density,
    gbec_shell_density,
    mode_density,
    solve_mu,
)
from condlab.ideal_bose import _certified_density, _gibbs_mean_n, _gibbs_mean_n_batch
from condlab.lattice import occupancy_table

RHO_C_BETA1 = 0.05864362134764442
I_BETA1_MU_NEG05 = 0.018194205980410223
ABAR_RHO0_005 = 100.01814515039793
ZM_RHO0_005 = 0.009998185814146958
ABAR_RHO0_RHOC = 72.7514496178987
ZM_RHO0_RHOC = 0.01374543057564003
DIAG_SINGLE_MODE_MEAN_N = 1.129397548060153


def test_critical_density_closed_form():
    rc = critical_density(1.0)
    assert rc == pytest.approx(RHO_C_BETA1, rel=1e-12)
    assert rc == pytest.approx(zeta(1.5) * (4 * math.pi) ** -1.5, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(beta=st.floats(0.1, 10.0))
def test_critical_density_beta_scaling(beta):
    assert critical_density(beta) == pytest.approx(
        critical_density(1.0) * beta**-1.5, rel=1e-9)


def test_bulk_density_at_gapped_mu():
    # with mu < 0 the finite-volume sum converges to the bulk integral
    # exponentially fast, so V = 1e6 already reproduces it to ~1e-11
    box = BoxGeometry.cubic(1e6)
    table = occupancy_table(box, 1.0)
    d = _certified_density(table, 1.0, -0.5, 1e6)
    assert d == pytest.approx(I_BETA1_MU_NEG05, rel=1e-9)


def test_finite_volume_deficit_shrinks():
    rc = critical_density(1.0)
    ratios = [finite_volume_critical_density(BoxGeometry.cubic(V), 1.0) / rc
              for V in (1e4, 1e5, 1e6)]
    assert ratios[0] == pytest.approx(0.822, abs=5e-3)
    assert ratios[0] < ratios[1] < ratios[2] < 1.0
    # deficit falls like 1/L = V^{-1/3}: each decade of volume shrinks it
    # by about 10^{1/3}
    d = [1.0 - r for r in ratios]
    assert d[0] / d[1] == pytest.approx(10 ** (1 / 3), rel=0.08)


def test_solve_mu_is_certified():
    box = BoxGeometry.cubic(1e5)
    rho = 2 * critical_density(1.0)
    mu = solve_mu(box, 1.0, rho)
    assert mu < 0
    table = occupancy_table(box, 1.0)
    assert _certified_density(table, 1.0, mu, box.V) == pytest.approx(
        rho, rel=1e-9)


@settings(max_examples=15, deadline=None)
@given(factor=st.floats(0.5, 3.0))
def test_solve_mu_monotone_in_density(factor):
    box = BoxGeometry.cubic(1e4)
    rho = factor * critical_density(1.0)
    mu = solve_mu(box, 1.0, rho)
    mu_hi = solve_mu(box, 1.0, rho * 1.1)
    assert mu < mu_hi < 0


def test_zero_mode_density_matches_occupation():
    box = BoxGeometry.cubic(1e4)
    mu = solve_mu(box, 1.0, 2 * critical_density(1.0))
    zm = mode_density(box, 1.0, 2 * critical_density(1.0), (0, 0, 0))
    assert zm == pytest.approx(
        1.0 / math.expm1(-mu) / box.V, rel=1e-12)


def test_gbec_report_shape():
    rho = 2 * critical_density(1.0)
    report = gbec_shell_density(
        [BoxGeometry.cubic(V) for V in (1e4, 3e4, 1e5)],
        1.0, rho, deltas=(0.25, 0.1, 0.05))
    assert report.rho_c == pytest.approx(RHO_C_BETA1, rel=1e-12)
    assert report.kind in {"I", "II", "III", "none", "ambiguous"}
    assert classify_gbec(report) == report.kind
    for row in report.rows:
        assert set(row) >= {"V", "delta", "mu", "rho_zero_mode",
                            "rho_shell", "tail_bound"}
    assert report.shell_estimate.value > 0
    # the condensed shell carries a density of the order of rho - rho_c
    assert report.shell_estimate.value == pytest.approx(
        rho - report.rho_c, rel=0.25)


def test_gbec_rejects_degenerate_ladders():
    rho = 2 * critical_density(1.0)
    boxes = [BoxGeometry.cubic(V) for V in (1e4, 3e4, 1e5)]
    with pytest.raises(ValueError):
        gbec_shell_density(boxes, 1.0, rho, deltas=(0.25, 0.1))
    with pytest.raises(ValueError):
        gbec_shell_density(boxes[::-1], 1.0, rho, deltas=(0.25, 0.1, 0.05))
    mixed = [BoxGeometry.cubic(1e4), BoxGeometry(V=3e4, alphas=(0.5, 0.25, 0.25))]
    with pytest.raises(ValueError):
        gbec_shell_density(mixed, 1.0, rho, deltas=(0.25, 0.1, 0.05))


def test_casimir_root_oracles():
    rc = critical_density(1.0)
    a = casimir_root(1.0, rc + 0.05)
    assert a.A == pytest.approx(ABAR_RHO0_005, rel=1e-10)
    assert a.zero_mode_density == pytest.approx(ZM_RHO0_005, rel=1e-10)
    assert a.shell_density == pytest.approx(0.05, rel=1e-12)
    b = casimir_root(1.0, 2 * rc)
    assert b.A == pytest.approx(ABAR_RHO0_RHOC, rel=1e-10)
    assert b.zero_mode_density == pytest.approx(ZM_RHO0_RHOC, rel=1e-10)


def test_casimir_root_satisfies_equation():
    root = casimir_root(1.0, 2 * critical_density(1.0))
    s = math.sqrt(root.A)
    lhs = 1.0 / (math.tanh(s / 2) * 2 * s)
    assert lhs == pytest.approx(root.shell_density, rel=1e-10)


def test_casimir_root_requires_supersaturation():
    with pytest.raises(ValueError):
        casimir_root(1.0, 0.5 * critical_density(1.0))


def test_diagonal_single_mode_oracle():
    assert _gibbs_mean_n(-0.5, 1.0, 1.0) == pytest.approx(
        DIAG_SINGLE_MODE_MEAN_N, rel=1e-13)


def test_diagonal_batch_matches_scalar():
    ems = np.array([-0.5, -0.1, 0.2, 1.0, 3.0])
    batch = _gibbs_mean_n_batch(ems, 1.0, 0.07, 4096)
    for em, b in zip(ems, batch):
        if not np.isnan(b):
            assert b == pytest.approx(_gibbs_mean_n(float(em), 1.0, 0.07),
                                      rel=1e-11)
    # large positive gaps certify quickly, so at least those entries resolve
    assert not np.isnan(batch[-1])


def test_diagonal_free_limit_matches_bose():
    # as the repulsion vanishes the diagonal model reduces to free bosons
    em = 0.3
    free = 1.0 / math.expm1(em)
    assert _gibbs_mean_n(em, 1.0, 1e-9) == pytest.approx(free, rel=1e-6)


def test_diagonal_density_report():
    box = BoxGeometry.cubic(1e4)
    rep = diagonal_model_density(box, 1.0, -0.01, coupling=0.1)
    assert rep.total_density > 0
    assert rep.max_mode_density < rep.total_density
    assert rep.tail_bound < 1e-8 * rep.total_density
    assert len(rep.energies) == len(rep.mean_occupation)


def test_diagonal_solve_mu_reaches_target():
    box = BoxGeometry.cubic(1e4)
    rho = 2 * critical_density(1.0)
    mu = diagonal_solve_mu(box, 1.0, rho, coupling=0.1)
    rep = diagonal_model_density(box, 1.0, mu, coupling=0.1)
    assert rep.total_density == pytest.approx(rho, rel=1e-8)


def test_diagonal_allows_positive_mu():
    # the repulsive term keeps every mode sum finite even at mu > 0, unlike
    # the free gas
    box = BoxGeometry.cubic(1000.0)
    rep = diagonal_model_density(box, 1.0, 0.05, coupling=0.2)
    assert np.isfinite(rep.total_density)
