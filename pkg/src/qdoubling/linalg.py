"""Dense complex linear-algebra kernels shared by the whole package.

Everything operates on 2-D ``numpy`` arrays of ``complex128`` in row-major
order.  Permutation matrices are never stored densely; a :class:`Permutation`
keeps an index vector and all products with permutation matrices are pure
entry moves.

Permutation convention
----------------------
A :class:`Permutation` ``p`` represents the matrix ``Q`` with
``Q[i, j] = 1  iff  j == p.image[i]``.  Consequently

* ``Q @ a``   gathers rows:     ``a[p.image, :]``
* ``a @ Q.T`` gathers columns:  ``a[:, p.image]``
* ``Q.T @ a`` and ``a @ Q`` use the inverse image.

The product of two permutation matrices ``P @ R`` is the permutation with
image ``r.image[p.image]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class SingularMatrixError(Exception):
    """A pivot fell below the singularity tolerance during a factorization."""

    def __init__(self, pivot_index: int, pivot_magnitude: float, message: str | None = None):
        self.pivot_index = pivot_index
        self.pivot_magnitude = pivot_magnitude
        super().__init__(
            message
            or f"singular matrix: pivot {pivot_index} has magnitude {pivot_magnitude:.3e}"
        )


class RankDeficientError(Exception):
    """A matrix expected to have full column rank does not."""


#: Relative pivot threshold for declaring a matrix singular.  Double-precision
#: unit roundoff is ~1.1e-16; the factor leaves headroom for growth.
SINGULARITY_TOL = 1e-13


def as_complex_matrix(a) -> np.ndarray:
    """Return ``a`` as a 2-D complex128 array (copying only if needed)."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={m.ndim}")
    return m


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit dimension check."""
    a = as_complex_matrix(a)
    b = as_complex_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


class MatrixNorms(NamedTuple):
    one: float
    inf: float
    fro: float
    two_est: float


def norms(a: np.ndarray) -> MatrixNorms:
    """One, infinity and Frobenius norms plus the 2-norm estimate.

    The 2-norm is estimated as ``sqrt(norm1 * norminf)``, which always bounds
    the true spectral norm from above.  No SVD is ever computed.
    """
    a = as_complex_matrix(a)
    absa = np.abs(a)
    one = float(absa.sum(axis=0).max(initial=0.0))
    inf = float(absa.sum(axis=1).max(initial=0.0))
    fro = float(np.sqrt((absa * absa).sum()))
    return MatrixNorms(one, inf, fro, float(np.sqrt(one * inf)))


def two_est(a: np.ndarray) -> float:
    """Cheap upper bound for the spectral norm: ``sqrt(norm1 * norminf)``."""
    return norms(a).two_est


# ---------------------------------------------------------------------------
# LU factorization with row pivoting
# ---------------------------------------------------------------------------


@dataclass
class LUFactors:
    """Packed LU factors of a square matrix with row-pivot bookkeeping.

    ``lu`` holds L (unit lower, below the diagonal) and U (on and above);
    ``rows[k]`` is the original row index moved into position ``k``.
    ``pivot_mags`` are the pivot magnitudes in elimination order.
    """

    lu: np.ndarray
    rows: np.ndarray
    pivot_mags: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.lu.shape[0]

    @property
    def min_pivot(self) -> float:
        return float(self.pivot_mags.min())

    @property
    def condition_estimate(self) -> float:
        """Ratio of largest to smallest pivot magnitude."""
        small = float(self.pivot_mags.min())
        if small == 0.0:
            return np.inf
        return float(self.pivot_mags.max() / small)

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve ``a @ x = b`` for one or more right-hand-side columns."""
        b = as_complex_matrix(b)
        if b.shape[0] != self.n:
            raise ValueError(f"rhs has {b.shape[0]} rows, expected {self.n}")
        n = self.n
        x = b[self.rows, :].copy()
        lu = self.lu
        for k in range(1, n):  # forward substitution, unit lower factor
            x[k] -= lu[k, :k] @ x[:k]
        for k in range(n - 1, -1, -1):  # back substitution
            if k < n - 1:
                x[k] -= lu[k, k + 1:] @ x[k + 1:]
            x[k] /= lu[k, k]
        return x


def lu_factor(a: np.ndarray, tol: float = SINGULARITY_TOL) -> LUFactors:
    """Row-pivoted LU factorization of a square matrix.

    Raises :class:`SingularMatrixError` (carrying the failing pivot index)
    as soon as the best available pivot drops below ``tol * norm_inf(a)``.
    """
    a = as_complex_matrix(a)
    n, m = a.shape
    if n != m:
        raise ValueError(f"lu_factor needs a square matrix, got {a.shape}")
    lu = a.copy()
    rows = np.arange(n)
    threshold = tol * norms(a).inf
    pivot_mags = np.empty(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        mag = abs(lu[p, k])
        if mag <= threshold:
            raise SingularMatrixError(k, mag)
        if p != k:
            lu[[k, p], :] = lu[[p, k], :]
            rows[[k, p]] = rows[[p, k]]
        pivot_mags[k] = mag
        if k < n - 1:
            lu[k + 1:, k] /= lu[k, k]
            lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return LUFactors(lu, rows, pivot_mags)


def lu_solve(a: np.ndarray, b: np.ndarray, tol: float = SINGULARITY_TOL) -> np.ndarray:
    """Solve ``a @ x = b`` by row-pivoted elimination (no explicit inverse)."""
    return lu_factor(a, tol=tol).solve(b)


def solve_transposed(a: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Solve ``x @ a = c`` (right division) without forming ``inv(a)``."""
    return lu_solve(as_complex_matrix(a).T, as_complex_matrix(c).T).T


# ---------------------------------------------------------------------------
# Thin QR
# ---------------------------------------------------------------------------


def thin_qr(z: np.ndarray, tol: float = SINGULARITY_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR factorization ``z = u @ r`` with orthonormal ``u``.

    Raises :class:`RankDeficientError` when a diagonal entry of ``r`` falls
    below ``tol`` times the largest one.
    """
    z = as_complex_matrix(z)
    if z.shape[0] < z.shape[1]:
        raise ValueError(f"thin_qr needs rows >= cols, got {z.shape}")
    u, r = np.linalg.qr(z)
    diag = np.abs(np.diag(r))
    if diag.size and diag.min() <= tol * max(diag.max(), 1e-300):
        raise RankDeficientError(
            f"rank-deficient matrix: |R| diagonal range [{diag.min():.3e}, {diag.max():.3e}]"
        )
    return u, r


# ---------------------------------------------------------------------------
# Permutations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Permutation:
    """A permutation of ``{0..n-1}`` standing in for an n-by-n 0/1 matrix."""

    image: np.ndarray

    def __post_init__(self):
        img = np.asarray(self.image, dtype=np.intp)
        if img.ndim != 1:
            raise ValueError("permutation image must be a 1-D index vector")
        if not np.array_equal(np.sort(img), np.arange(img.size)):
            raise ValueError("permutation image is not a bijection on {0..n-1}")
        img = img.copy()
        img.setflags(write=False)
        object.__setattr__(self, "image", img)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(np.arange(n))

    @property
    def n(self) -> int:
        return self.image.size

    def __eq__(self, other) -> bool:
        return isinstance(other, Permutation) and np.array_equal(self.image, other.image)

    def __hash__(self):
        return hash(self.image.tobytes())

    def inverse(self) -> "Permutation":
        inv = np.empty(self.n, dtype=np.intp)
        inv[self.image] = np.arange(self.n)
        return Permutation(inv)

    def compose(self, other: "Permutation") -> "Permutation":
        """Permutation of the matrix product ``self @ other``."""
        if self.n != other.n:
            raise ValueError("cannot compose permutations of different sizes")
        return Permutation(other.image[self.image])

    def swapped(self, i: int, j: int) -> "Permutation":
        img = self.image.copy()
        img[i], img[j] = img[j], img[i]
        return Permutation(img)

    def matrix(self) -> np.ndarray:
        """Dense 0/1 matrix, for oracle checks only."""
        q = np.zeros((self.n, self.n), dtype=np.complex128)
        q[np.arange(self.n), self.image] = 1.0
        return q


def permute_rows(p: Permutation, a: np.ndarray, transpose: bool = False) -> np.ndarray:
    """``Q @ a`` (or ``Q.T @ a`` with ``transpose=True``) by entry moves."""
    a = as_complex_matrix(a)
    if a.shape[0] != p.n:
        raise ValueError(f"permutation size {p.n} does not match {a.shape[0]} rows")
    idx = p.inverse().image if transpose else p.image
    return a[idx, :]


def permute_cols(p: Permutation, a: np.ndarray, transpose: bool = False) -> np.ndarray:
    """``a @ Q`` (or ``a @ Q.T`` with ``transpose=True``) by entry moves."""
    a = as_complex_matrix(a)
    if a.shape[1] != p.n:
        raise ValueError(f"permutation size {p.n} does not match {a.shape[1]} columns")
    idx = p.image if transpose else p.inverse().image
    return a[:, idx]


def frozen(a: np.ndarray) -> np.ndarray:
    """A read-only complex copy, used for immutable value types."""
    out = np.array(a, dtype=np.complex128, copy=True)
    out.setflags(write=False)
    return out
