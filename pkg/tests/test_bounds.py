"""Constant formulas, premise refusals, and empirical bound validation."""

import math

import numpy as np
import pytest

from wcs.bounds import (
    PremiseError,
    largest_singular_value,
    operator_norm_bound,
    recovery_constants_floor_weights,
    rip_nsp_error_budget,
    robust_nsp_constants_from_rip,
    smallest_positive_singular_value,
)
from wcs.certify import rip_constant
from wcs.construct import sample_partial_unitary, unitary_with_flat_first_row
from wcs.core import SparseModel, build_partition

CARD = SparseModel.CARDINALITY
WCARD = SparseModel.WEIGHTED_CARDINALITY


# ---------------------------------------------------------------------------
# operator norm bound


def test_operator_norm_bound_trivial():
    assert operator_norm_bound(0.0, 1) == pytest.approx(1.0)


def test_operator_norm_bound_closed_form():
    assert operator_norm_bound(1.0 / 3.0, 3) == pytest.approx(2.0)


def test_operator_norm_bound_rejects_bad_inputs():
    with pytest.raises(PremiseError):
        operator_norm_bound(1.0, 2)
    with pytest.raises(PremiseError):
        operator_norm_bound(0.1, 0)


def test_operator_norm_bound_empirical():
    rng = np.random.default_rng(0)
    for trial in range(6):
        n = int(rng.integers(8, 13))
        m = n - int(rng.integers(1, 3))
        base = unitary_with_flat_first_row(n, seed=trial, real=True)
        A = sample_partial_unitary(base, m, seed=trial + 50).matrix
        model = CARD if trial % 2 else WCARD
        if model is CARD:
            w = np.ones(n)
            s = 2
        else:
            wval = float(rng.uniform(0.8, 1.5))
            w = np.full(n, wval)
            s = 3 * wval**2  # integer multiple keeps the partition bound valid
        delta = rip_constant(A, w, model, s).delta
        part = build_partition(w, model, s)
        measured = largest_singular_value(A)
        assert measured <= operator_norm_bound(min(delta, 1 - 1e-12), part.n_blocks) + 1e-9
        if part.nv_bound is not None:
            assert part.n_blocks <= part.nv_bound + 1e-12


# ---------------------------------------------------------------------------
# recovery constants for floor-bounded weights


def test_floor_constants_at_zero_delta():
    c = recovery_constants_floor_weights(0.0, 1.0)
    assert c.as_tuple() == pytest.approx((2.0, 4.0, 2.0, 6.0))


def test_floor_constants_worked_example():
    c = recovery_constants_floor_weights(1.0 / 11.0, 0.75)
    assert c.l2_sigma == pytest.approx(4.0)
    assert c.l1_sigma == pytest.approx(30.0 / 11.0)
    assert c.l1_noise == pytest.approx(6.0 * math.sqrt(12.0 / 11.0))
    assert c.l2_noise == pytest.approx(math.sqrt(132.0))


def test_floor_constants_refuse_at_boundary():
    with pytest.raises(PremiseError):
        recovery_constants_floor_weights(1.0 / 3.0, 1.0)  # boundary value exactly
    with pytest.raises(PremiseError):
        recovery_constants_floor_weights(0.3, 0.75)  # above 0.75/2.75


def test_floor_constants_monotone_in_delta():
    floor = 0.9
    limit = floor / (floor + 2.0)
    deltas = np.linspace(0.0, limit * 0.98, 40)
    prev = None
    for d in deltas:
        c = recovery_constants_floor_weights(float(d), floor)
        tup = c.as_tuple()
        assert all(v > 0 for v in tup)
        if prev is not None:
            assert all(b >= a - 1e-12 for a, b in zip(prev, tup))
        prev = tup


def test_floor_constants_diverge_near_boundary():
    floor = 1.0
    near = floor / (floor + 2.0) - 1e-9
    c = recovery_constants_floor_weights(near, floor)
    assert c.l2_sigma > 1e6


# ---------------------------------------------------------------------------
# robust constants from the triple-order isometry constant


def test_robust_constants_fifth():
    c = robust_nsp_constants_from_rip(0.2)
    assert c.rho == pytest.approx(0.5)
    assert c.gamma == pytest.approx(1.25 * math.sqrt(1.2))
    assert c.l2_noise == pytest.approx(7.5 * math.sqrt(1.2))


def test_robust_constants_zero():
    c = robust_nsp_constants_from_rip(0.0)
    assert (c.rho, c.gamma, c.l2_noise) == pytest.approx((0.0, 1.0, 6.0))


def test_robust_constants_refuse_at_third():
    with pytest.raises(PremiseError):
        robust_nsp_constants_from_rip(1.0 / 3.0)


# ---------------------------------------------------------------------------
# error budget


def test_budget_zero_when_sparse_and_noiseless():
    c = recovery_constants_floor_weights(0.1, 0.9)
    b = rip_nsp_error_budget(0.0, 2, 0.1, 3, 1.0, 0.0, c)
    assert b.l1_bound == 0.0 and b.l2_bound == 0.0


def test_budget_noise_terms_scale_inversely_with_lambda():
    c = recovery_constants_floor_weights(0.1, 0.9)
    b1 = rip_nsp_error_budget(0.5, 2, 0.1, 3, 1.0, 0.2, c)
    b2 = rip_nsp_error_budget(0.5, 2, 0.1, 3, 2.0, 0.2, c)
    assert b2.l2_noise_term == pytest.approx(b1.l2_noise_term / 2.0)
    sigma_part = c.l1_sigma * 0.5
    assert b1.l1_bound - sigma_part == pytest.approx(2.0 * (b2.l1_bound - sigma_part))


def test_budget_homogeneous_in_sigma_and_noise():
    c = recovery_constants_floor_weights(0.05, 1.0)
    b1 = rip_nsp_error_budget(0.3, 2, 0.05, 2, 1.5, 0.1, c)
    b3 = rip_nsp_error_budget(0.9, 2, 0.05, 2, 1.5, 0.3, c)
    assert b3.l1_bound == pytest.approx(3.0 * b1.l1_bound)
    assert b3.l2_bound == pytest.approx(3.0 * b1.l2_bound)


def test_budget_weighted_model_exposes_only_noise_term():
    c = robust_nsp_constants_from_rip(0.2)
    b = rip_nsp_error_budget(0.4, 3.0, 0.2, 2, 1.0, 0.1, c)
    assert b.l1_bound is None
    assert b.l2_bound is None  # sigma coefficients unavailable for nonsparse input
    assert b.l2_noise_term > 0
    b0 = rip_nsp_error_budget(0.0, 3.0, 0.2, 2, 1.0, 0.1, c)
    assert b0.l2_bound == pytest.approx(b0.l2_noise_term)
    assert b.constants["l1_sigma"] is None


def test_budget_rejects_zero_lambda():
    c = robust_nsp_constants_from_rip(0.1)
    with pytest.raises(PremiseError):
        rip_nsp_error_budget(0.0, 2, 0.1, 1, 0.0, 0.1, c)


# ---------------------------------------------------------------------------
# singular values


def test_largest_singular_value_examples():
    assert largest_singular_value(np.eye(3)) == pytest.approx(1.0)
    assert largest_singular_value(np.diag([3.0, 1.0])) == pytest.approx(3.0)


def test_largest_singular_value_eigen_crosscheck():
    rng = np.random.default_rng(1)
    M = rng.standard_normal((5, 8)) + 1j * rng.standard_normal((5, 8))
    lam = largest_singular_value(M)
    top_eig = float(np.linalg.eigvalsh(M.conj().T @ M)[-1])
    assert lam**2 == pytest.approx(top_eig, rel=1e-10)


def test_smallest_positive_singular_value_skips_null_directions():
    M = np.diag([3.0, 2.0, 0.0])
    assert smallest_positive_singular_value(M) == pytest.approx(2.0)
