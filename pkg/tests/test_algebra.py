"""Tests for the small-matrix algebra kernel.

Each derived expectation is checked against an independent oracle that is
implemented here from first principles (Leibniz sums, Gaussian elimination,
power iteration, a long raw exponential series) rather than against the
routines under test.
"""

import itertools
import math

import numpy as np
import pytest

from plastiq.algebra import (
    as_matrix,
    cof,
    det,
    frobenius,
    mat_exp,
    mat_log_spd,
    polar_decompose,
    random_rotation,
    random_special,
    singular_values,
)
from plastiq.errors import NotSPD


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------

def leibniz_det(a):
    """Determinant as the full signed permutation sum."""
    d = a.shape[0]
    total = 0.0
    for perm in itertools.permutations(range(d)):
        sign = 1.0
        for i in range(d):
            for j in range(i + 1, d):
                if perm[i] > perm[j]:
                    sign = -sign
        prod = 1.0
        for i in range(d):
            prod *= a[i, perm[i]]
        total += sign * prod
    return total


def elimination_inverse(a):
    """Matrix inverse by Gauss-Jordan elimination with partial pivoting."""
    d = a.shape[0]
    aug = np.hstack([a.astype(float).copy(), np.eye(d)])
    for col in range(d):
        pivot = col + int(np.argmax(np.abs(aug[col:, col])))
        if abs(aug[pivot, col]) < 1e-14:
            raise ZeroDivisionError("singular matrix in oracle")
        aug[[col, pivot]] = aug[[pivot, col]]
        aug[col] /= aug[col, col]
        for row in range(d):
            if row != col:
                aug[row] -= aug[row, col] * aug[col]
    return aug[:, d:]


def power_iteration_sigma1(a, iters=2000):
    """Largest singular value via power iteration on a^T a."""
    g = a.T @ a
    v = np.ones(a.shape[0]) / math.sqrt(a.shape[0])
    lam = 0.0
    for _ in range(iters):
        w = g @ v
        lam = np.linalg.norm(w)
        if lam == 0.0:
            return 0.0
        v = w / lam
    return math.sqrt(lam)


def raw_series_exp(a, terms=40):
    """Plain 40-term Taylor series for the matrix exponential."""
    d = a.shape[0]
    out = np.eye(d)
    term = np.eye(d)
    for k in range(1, terms + 1):
        term = term @ a / k
        out = out + term
    return out


# ---------------------------------------------------------------------------
# det / cof
# ---------------------------------------------------------------------------

def test_det_identity_2d():
    assert det(np.eye(2)) == 1.0


def test_det_diagonal_product():
    assert det(np.diag([2.0, 0.5])) == pytest.approx(1.0, abs=1e-15)


def test_det_matches_leibniz_oracle_3d():
    rng = np.random.default_rng(7)
    for _ in range(200):
        a = rng.uniform(-1.0, 1.0, size=(3, 3))
        assert det(a) == pytest.approx(leibniz_det(a), abs=1e-12)


def test_cof_identity_2d():
    np.testing.assert_allclose(cof(np.eye(2)), np.eye(2))


def test_cof_closed_form_2d():
    a, b, c, d = 1.3, -0.4, 2.1, 0.7
    np.testing.assert_allclose(
        cof(np.array([[a, b], [c, d]])), np.array([[d, -c], [-b, a]])
    )


def test_cof_1d_convention():
    np.testing.assert_allclose(cof(np.array([[3.0]])), np.array([[1.0]]))


def test_cof_matches_elimination_inverse_oracle_3d():
    rng = np.random.default_rng(11)
    count = 0
    while count < 100:
        a = rng.uniform(-1.0, 1.0, size=(3, 3))
        if abs(leibniz_det(a)) < 0.05:
            continue
        count += 1
        expected = leibniz_det(a) * elimination_inverse(a).T
        np.testing.assert_allclose(cof(a), expected, atol=1e-10)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_cofactor_transpose_identity(d):
    rng = np.random.default_rng(13 + d)
    for _ in range(200):
        m = rng.uniform(-2.0, 2.0, size=(d, d))
        lhs = cof(m).T @ m
        rhs = det(m) * np.eye(d)
        tol = 1e-10 * (1.0 + frobenius(m) ** 2)
        assert np.max(np.abs(lhs - rhs)) <= tol


@pytest.mark.parametrize("d", [2, 3])
def test_det_and_cof_are_multiplicative(d):
    rng = np.random.default_rng(17 + d)
    for _ in range(200):
        a = rng.uniform(-1.5, 1.5, size=(d, d))
        b = rng.uniform(-1.5, 1.5, size=(d, d))
        scale = 1.0 + abs(det(a) * det(b))
        assert abs(det(a @ b) - det(a) * det(b)) <= 1e-10 * scale
        cscale = 1.0 + np.max(np.abs(cof(a) @ cof(b)))
        assert np.max(np.abs(cof(a @ b) - cof(a) @ cof(b))) <= 1e-10 * cscale


# ---------------------------------------------------------------------------
# singular values
# ---------------------------------------------------------------------------

def test_singular_values_diagonal():
    np.testing.assert_allclose(singular_values(np.diag([2.0, 0.5])), [2.0, 0.5])


def test_singular_values_identity():
    np.testing.assert_allclose(singular_values(np.eye(2)), [1.0, 1.0])


def test_singular_values_shear_closed_form():
    shear = np.array([[1.0, 1.0], [0.0, 1.0]])
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    s = singular_values(shear)
    assert s[0] == pytest.approx(golden, abs=1e-12)
    assert s[1] == pytest.approx(2.0 / (1.0 + math.sqrt(5.0)), abs=1e-12)
    assert s[0] == pytest.approx(power_iteration_sigma1(shear), abs=1e-10)


@pytest.mark.parametrize("d", [2, 3])
def test_singular_values_match_power_iteration(d):
    rng = np.random.default_rng(19 + d)
    for _ in range(50):
        a = rng.uniform(-2.0, 2.0, size=(d, d))
        assert singular_values(a)[0] == pytest.approx(
            power_iteration_sigma1(a), abs=1e-9
        )


@pytest.mark.parametrize("d", [2, 3])
def test_singular_values_rotation_invariant(d):
    rng = np.random.default_rng(23 + d)
    for _ in range(100):
        a = rng.uniform(-2.0, 2.0, size=(d, d))
        r1 = random_rotation(rng, d)
        r2 = random_rotation(rng, d)
        s0 = singular_values(a)
        s1 = singular_values(r1 @ a @ r2)
        assert np.max(np.abs(s0 - s1)) <= 1e-10 * (1.0 + s0[0])


# ---------------------------------------------------------------------------
# matrix exponential / logarithm
# ---------------------------------------------------------------------------

def test_mat_exp_zero():
    np.testing.assert_allclose(mat_exp(np.zeros((2, 2))), np.eye(2))


def test_mat_exp_nilpotent():
    n = np.array([[0.0, 1.0], [0.0, 0.0]])
    np.testing.assert_allclose(mat_exp(n), np.array([[1.0, 1.0], [0.0, 1.0]]))


@pytest.mark.parametrize("d", [2, 3])
def test_mat_exp_matches_long_series(d):
    rng = np.random.default_rng(29 + d)
    for _ in range(100):
        a = rng.uniform(-0.5, 0.5, size=(d, d))
        a -= np.eye(d) * np.trace(a) / d
        if frobenius(a) > 1.0:
            a /= frobenius(a)
        np.testing.assert_allclose(mat_exp(a), raw_series_exp(a), atol=1e-12)


@pytest.mark.parametrize("d", [2, 3])
def test_mat_exp_trace_free_lands_in_sl(d):
    rng = np.random.default_rng(31 + d)
    for _ in range(200):
        a = rng.uniform(-1.5, 1.5, size=(d, d))
        a -= np.eye(d) * np.trace(a) / d
        assert abs(det(mat_exp(a)) - 1.0) <= 1e-10


def test_mat_log_identity():
    np.testing.assert_allclose(mat_log_spd(np.eye(2)), np.zeros((2, 2)), atol=1e-14)


def test_mat_log_diagonal():
    s = np.diag([math.e, 1.0 / math.e])
    np.testing.assert_allclose(mat_log_spd(s), np.diag([1.0, -1.0]), atol=1e-14)


def test_mat_log_round_trips_through_exp():
    rng = np.random.default_rng(37)
    for _ in range(100):
        q = random_rotation(rng, 2)
        s = q @ np.diag(rng.uniform(0.5, 2.0, size=2)) @ q.T
        np.testing.assert_allclose(mat_exp(mat_log_spd(s)), s, atol=1e-8)


def test_mat_log_rejects_asymmetric():
    with pytest.raises(NotSPD):
        mat_log_spd(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_mat_log_rejects_nonpositive():
    with pytest.raises(NotSPD):
        mat_log_spd(np.diag([1.0, -0.5]))


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def test_minors_bundle_invariants():
    from plastiq.algebra import minors

    rng = np.random.default_rng(47)
    for d in (2, 3):
        for _ in range(100):
            m = rng.uniform(-2.0, 2.0, size=(d, d))
            if abs(leibniz_det(m)) < 0.05:
                continue
            bundle = minors(m)
            assert bundle.determinant == pytest.approx(
                leibniz_det(m), rel=1e-12, abs=1e-12
            )
            lhs = bundle.cofactor.T
            rhs = bundle.determinant * elimination_inverse(m)
            assert np.max(np.abs(lhs - rhs)) <= 1e-10 * (1.0 + np.max(np.abs(rhs)))


def test_as_matrix_rejects_nan():
    with pytest.raises(ValueError):
        as_matrix(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_as_matrix_rejects_bad_dimension():
    with pytest.raises(ValueError):
        as_matrix(np.eye(4))


def test_polar_decompose_reconstructs():
    rng = np.random.default_rng(41)
    for _ in range(100):
        f = random_special(rng, 2, spread=0.8)
        r, u = polar_decompose(f)
        np.testing.assert_allclose(r @ u, f, atol=1e-12)
        np.testing.assert_allclose(r.T @ r, np.eye(2), atol=1e-12)
        assert det(r) == pytest.approx(1.0, abs=1e-12)
        assert np.min(np.linalg.eigvalsh(u)) > 0.0


def test_random_special_has_unit_determinant():
    rng = np.random.default_rng(43)
    for d in (1, 2, 3):
        for _ in range(50):
            assert det(random_special(rng, d)) == pytest.approx(1.0, abs=1e-10)
