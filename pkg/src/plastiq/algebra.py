"""Dense small-matrix algebra for d in {1, 2, 3}.

Determinants, cofactor matrices, singular values, matrix exponential and
principal SPD logarithm, plus SL(d)/SO(d) sampling helpers.  Every minor
formula is hard-coded per dimension; nothing here calls a general-purpose
factorization except the symmetric eigensolver used by ``mat_log_spd``.

All functions are pure and operate on plain ``numpy`` arrays of shape
``(d, d)``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotSPD

__all__ = [
    "Minors",
    "as_matrix",
    "det",
    "cof",
    "minors",
    "singular_values",
    "mat_exp",
    "mat_log_spd",
    "polar_decompose",
    "frobenius",
    "random_rotation",
    "random_special",
]


def as_matrix(m, dim=None):
    """Validate and return ``m`` as a (d, d) float array with finite entries.

    Raises ValueError for non-square shapes, d outside {1, 2, 3}, or
    NaN/Inf entries.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    d = a.shape[0]
    if d not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {d}")
    if dim is not None and d != dim:
        raise ValueError(f"expected dimension {dim}, got {d}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def det(m):
    """Determinant by cofactor expansion, exact formula per dimension."""
    a = np.asarray(m, dtype=float)
    d = a.shape[0]
    if d == 1:
        return float(a[0, 0])
    if d == 2:
        return float(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])
    return float(
        a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
        - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
        + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0])
    )


def cof(m):
    """Cofactor matrix (signed minors), satisfying cof(m)^T m = det(m) I.

    For d = 1 the cofactor is [[1]] by convention.
    """
    a = np.asarray(m, dtype=float)
    d = a.shape[0]
    if d == 1:
        return np.array([[1.0]])
    if d == 2:
        return np.array(
            [
                [a[1, 1], -a[1, 0]],
                [-a[0, 1], a[0, 0]],
            ]
        )
    c = np.empty((3, 3))
    c[0, 0] = a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]
    c[0, 1] = -(a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
    c[0, 2] = a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]
    c[1, 0] = -(a[0, 1] * a[2, 2] - a[0, 2] * a[2, 1])
    c[1, 1] = a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]
    c[1, 2] = -(a[0, 0] * a[2, 1] - a[0, 1] * a[2, 0])
    c[2, 0] = a[0, 1] * a[1, 2] - a[0, 2] * a[1, 1]
    c[2, 1] = -(a[0, 0] * a[1, 2] - a[0, 2] * a[1, 0])
    c[2, 2] = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    return c


def frobenius(m):
    """Frobenius norm."""
    a = np.asarray(m, dtype=float)
    return float(np.sqrt(np.sum(a * a)))


@dataclass(frozen=True)
class Minors:
    """A matrix together with its cofactor matrix and determinant.

    The minors are the quantities that polyconvex densities are convex in;
    cofactor^T matrix = determinant * I ties them together.
    """

    matrix: np.ndarray
    cofactor: np.ndarray
    determinant: float


def minors(m):
    """Collect (matrix, cofactor, determinant) for a d x d matrix."""
    a = as_matrix(m)
    return Minors(matrix=a, cofactor=cof(a), determinant=det(a))


def singular_values(m):
    """Singular values in descending order.

    d = 2 uses the closed form from |m|^2 and det m; d = 3 runs Jacobi
    rotations on m^T m until the off-diagonal mass drops below 1e-14
    (relative to the matrix scale).
    """
    a = np.asarray(m, dtype=float)
    d = a.shape[0]
    if d == 1:
        return np.array([abs(a[0, 0])])
    if d == 2:
        n2 = float(np.sum(a * a))
        dt = det(a)
        disc = max(n2 * n2 - 4.0 * dt * dt, 0.0)
        root = math.sqrt(disc)
        s1 = math.sqrt(max((n2 + root) / 2.0, 0.0))
        s2 = math.sqrt(max((n2 - root) / 2.0, 0.0))
        return np.array([s1, s2])
    evals = _jacobi_eigenvalues(a.T @ a)
    evals = np.clip(evals, 0.0, None)
    return np.sort(np.sqrt(evals))[::-1]


def _jacobi_eigenvalues(s, tol=1e-14, max_sweeps=100):
    """Eigenvalues of a symmetric 3x3 matrix by cyclic Jacobi rotations."""
    a = np.array(s, dtype=float)
    scale = max(1.0, float(np.max(np.abs(a))))
    for _ in range(max_sweeps):
        off = max(abs(a[0, 1]), abs(a[0, 2]), abs(a[1, 2]))
        if off <= tol * scale:
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            if abs(a[p, q]) <= tol * scale * 1e-2:
                continue
            theta = 0.5 * math.atan2(2.0 * a[p, q], a[q, q] - a[p, p])
            c, sn = math.cos(theta), math.sin(theta)
            rot = np.eye(3)
            rot[p, p] = c
            rot[q, q] = c
            rot[p, q] = sn
            rot[q, p] = -sn
            a = rot.T @ a @ rot
    return np.diag(a).copy()


def mat_exp(a):
    """Matrix exponential by scaling and squaring with a truncated series.

    Squaring count is ceil(log2(1 + ||a||_F)) + 4; series terms are added
    until they fall below 1e-18 relative.  det(mat_exp(a)) = exp(tr a) holds
    to ~1e-12, so trace-free inputs map into SL(d) to that accuracy.
    """
    x = np.asarray(a, dtype=float)
    d = x.shape[0]
    norm = frobenius(x)
    s = int(math.ceil(math.log2(1.0 + norm))) + 4
    y = x / (2.0**s)
    term = np.eye(d)
    total = np.eye(d)
    scale = max(1.0, norm)
    for k in range(1, 30):
        term = term @ y / k
        total = total + term
        if frobenius(term) < 1e-18 * scale:
            break
    for _ in range(s):
        total = total @ total
    return total


def mat_log_spd(s):
    """Principal logarithm of a symmetric positive definite matrix.

    Raises NotSPD when the input is asymmetric beyond 1e-10 (relative to
    scale) or has an eigenvalue <= 0.
    """
    a = np.asarray(s, dtype=float)
    scale = max(1.0, float(np.max(np.abs(a))))
    if float(np.max(np.abs(a - a.T))) > 1e-10 * scale:
        raise NotSPD("matrix is asymmetric beyond 1e-10")
    sym = 0.5 * (a + a.T)
    evals, evecs = np.linalg.eigh(sym)
    if np.min(evals) <= 0.0:
        raise NotSPD(f"matrix has non-positive eigenvalue {np.min(evals):g}")
    return (evecs * np.log(evals)) @ evecs.T


def polar_decompose(f):
    """Right polar decomposition f = R U with R a rotation and U SPD.

    Requires det f > 0 so that R lands in SO(d).
    """
    a = np.asarray(f, dtype=float)
    if det(a) <= 0.0:
        raise ValueError("polar_decompose requires det > 0")
    u = _spd_sqrt(a.T @ a)
    r = a @ _spd_inverse(u)
    return r, u


def _spd_sqrt(s):
    evals, evecs = np.linalg.eigh(0.5 * (s + s.T))
    return (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.T


def _spd_inverse(s):
    evals, evecs = np.linalg.eigh(0.5 * (s + s.T))
    return (evecs / evals) @ evecs.T


def random_rotation(rng, d=2):
    """Uniform random rotation in SO(d) for d in {1, 2, 3}."""
    if d == 1:
        return np.array([[1.0]])
    if d == 2:
        t = rng.uniform(0.0, 2.0 * math.pi)
        c, s = math.cos(t), math.sin(t)
        return np.array([[c, -s], [s, c]])
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    if det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_special(rng, d=2, spread=0.5):
    """Random SL(d) matrix exp(A) with A trace-free, entries ~ spread."""
    a = rng.uniform(-spread, spread, size=(d, d))
    a -= np.eye(d) * (np.trace(a) / d)
    return mat_exp(a)
