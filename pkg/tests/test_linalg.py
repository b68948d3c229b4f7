import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from finbisim import fixtures
from finbisim.errors import NotSchurStable, NumericError, SpecError, UnsupportedSpectrum
from finbisim.linalg import (apply_rows, build_transform, certify_transform, induced_one_norm,
                             letter_gain, matrix_powers, power_norm_sequence, reach_norm_bound,
                             spectral_radius, transform_for)
from finbisim.reachset import forced_response_points
from finbisim.sysmodel import SystemSpec

TRI = np.array([[0.25, -0.15], [0.0, 0.1]])


def test_spectral_radius_examples():
    assert spectral_radius(TRI) == 0.25
    assert spectral_radius(np.eye(2)) == 1.0
    assert spectral_radius(np.diag([2.0, 0.5])) == 2.0


def test_induced_norm_examples():
    assert induced_one_norm(TRI) == 0.25
    assert induced_one_norm(np.eye(3)) == 1.0
    assert induced_one_norm(fixtures.COUNTER_A) == 18.0


def test_power_norms():
    assert power_norm_sequence(TRI, 1) == [0.25]
    assert power_norm_sequence(np.zeros((3, 3)), 4) == [0.0] * 4
    assert power_norm_sequence(np.eye(2), 5) == [1.0] * 5


def test_power_closed_form():
    # A^k = [[4^-k, 10^-k - 4^-k], [0, 10^-k]]
    for k, P in enumerate(matrix_powers(TRI, 8)):
        want = np.array([[0.25**k, 0.1**k - 0.25**k], [0.0, 0.1**k]])
        np.testing.assert_allclose(P, want, rtol=1e-12, atol=1e-15)


def test_power_overflow():
    with pytest.raises(NumericError):
        matrix_powers(np.array([[1e200]]), 3)


matrices = st.integers(1, 4).flatmap(
    lambda n: arrays(float, (n, n), elements=st.floats(-5, 5, allow_nan=False)))


@given(matrices)
def test_norm_matches_unit_vector_oracle(A):
    # the induced 1-norm is attained at a signed unit vector
    n = len(A)
    oracle = max(np.abs(A @ e).sum() for e in np.eye(n))
    assert induced_one_norm(A) == pytest.approx(oracle, rel=1e-12, abs=1e-300)


@given(matrices, matrices)
def test_norm_submultiplicative_and_bounds_rho(A, B):
    if A.shape == B.shape:
        assert induced_one_norm(A @ B) <= induced_one_norm(A) * induced_one_norm(B) * (1 + 1e-12) + 1e-12
    assert spectral_radius(A) <= induced_one_norm(A) * (1 + 1e-9) + 1e-12


@given(matrices, st.integers(1, 40))
def test_apply_rows_matches_matmul(M, rows):
    X = np.random.default_rng(rows).normal(size=(rows, M.shape[1]))
    np.testing.assert_allclose(apply_rows(M, X), X @ M.T, rtol=1e-12, atol=1e-12)
    # rows do not influence each other's bits
    np.testing.assert_array_equal(apply_rows(M, X)[:1], apply_rows(M, X[:1]))


def test_transform_for_triangular():
    st_ = build_transform(TRI, 0.3)
    assert st_.norm_certificate <= 0.55
    assert induced_one_norm(st_.T_inv @ TRI @ st_.T) == st_.norm_certificate
    assert induced_one_norm(st_.T @ st_.T_inv - np.eye(2)) <= 1e-9
    assert st_.kappa == pytest.approx(2 * st_.T_norm * st_.T_inv_norm / (1 - 0.25 - 0.3))


def test_transform_for_diagonal_is_identity():
    A = np.diag([0.5, -0.2, 0.1])
    st_ = build_transform(A, 0.1)
    np.testing.assert_allclose(np.abs(st_.T), np.eye(3), atol=1e-15)
    assert st_.norm_certificate == pytest.approx(0.5)


def test_rotation_like_spectrum_unsupported():
    # eigenvalues 0.3 +- 0.6i, the real Schur block has norm |a| + |b| = 0.9
    A = np.array([[0.3, 0.6], [-0.6, 0.3]])
    assert spectral_radius(A) == pytest.approx(np.hypot(0.3, 0.6))
    with pytest.raises(UnsupportedSpectrum, match="transform"):
        build_transform(A, 0.05)


def test_transform_override():
    A = np.array([[0.3, 0.6], [-0.6, 0.3]])
    # an override that misses the norm bound is rejected, not silently replaced
    bad = SystemSpec(A, np.eye(2), [[0, 0], [1, 0]], transform_override=np.eye(2))
    with pytest.raises(SpecError):
        transform_for(bad, 0.05)
    good = SystemSpec(TRI, np.eye(2), [[0, 0], [1, 0]], transform_override=np.eye(2))
    st_ = transform_for(good, 0.3)
    assert st_.norm_certificate == 0.25
    np.testing.assert_array_equal(st_.T, np.eye(2))


def test_certify_rejects_unstable():
    with pytest.raises(NotSchurStable):
        certify_transform(TRI, np.eye(2), 0.8)


@given(st.integers(2, 4), st.floats(0.05, 0.9), st.integers(0, 10**6))
def test_built_transforms_certify(n, rho, seed):
    rng = np.random.default_rng(seed)
    # real distinct spectrum, random conditioning
    V = rng.normal(size=(n, n)) + 3 * np.eye(n)
    lam = rng.uniform(-rho, rho, n)
    lam[0] = rho
    A = V @ np.diag(lam) @ np.linalg.inv(V)
    r = spectral_radius(A)
    eps = (1 - r) / 2
    try:
        st_ = build_transform(A, eps)
    except UnsupportedSpectrum:
        return
    assert induced_one_norm(st_.T_inv @ A @ st_.T) <= r + eps
    assert st_.kappa > 0 and np.isfinite(st_.kappa)


def test_reach_bound_examples():
    assert reach_norm_bound(fixtures.triangular_five_letter()) == pytest.approx(4 / 3, rel=1e-15)
    assert reach_norm_bound(SystemSpec([[0.0]], [[1.0]], [[0.0], [1.0]])) == 1.0
    assert reach_norm_bound(SystemSpec(TRI, np.eye(2), [[0, 0]])) == 0.0
    with pytest.raises(NotSchurStable):
        reach_norm_bound(fixtures.unstable_strips())


def test_reach_bound_dominates_enumeration():
    sys = fixtures.triangular_five_letter()
    R = reach_norm_bound(sys)
    for k in range(1, 8):
        P = forced_response_points(sys, k)
        assert np.abs(P).sum(axis=1).max() <= R + 1e-9


def test_reach_bound_needs_later_power():
    # ||A|| > 1 but ||A^2|| < 1
    A = np.array([[0.0, 1.5], [0.0, 0.0]])
    sys = SystemSpec(A, np.eye(2), [[0, 0], [0, 1]])
    R = reach_norm_bound(sys)
    assert R == pytest.approx(1 + 1.5)
    for w in itertools.product([0, 1], repeat=6):
        x = np.zeros(2)
        for j in w:
            x = A @ x + sys.BU[j]
        assert np.abs(x).sum() <= R + 1e-12


def test_letter_gain():
    assert letter_gain(fixtures.triangular_five_letter()) == 1.0
    assert letter_gain(fixtures.counterexample_system()) == 240.0
