"""The Q-standard-form pencil model.

A pencil in Q-standard form is the pair

    A_i = [[E, 0], [-X, I]] @ Q1,      B_i = [[I, -Y], [0, F]] @ Q2,

with permutation matrices ``Q1``, ``Q2`` of size ``m + n``, ``E`` m-by-m,
``F`` n-by-n, ``X`` n-by-m and ``Y`` m-by-n.  ``Q1 = Q2 = I`` recovers the
classical first standard form, and ``Q1 @ Q2.T`` equal to the block swap
(with ``m = n``) recovers the second.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    Permutation,
    as_complex_matrix,
    frozen,
    lu_solve,
    permute_rows,
)


class BreakdownError(Exception):
    """An algorithmic stage hit a singular or near-singular system."""

    def __init__(self, stage: str, detail: str = "", condition_estimate: float | None = None):
        self.stage = stage
        self.condition_estimate = condition_estimate
        message = f"breakdown in {stage}"
        if detail:
            message += f": {detail}"
        super().__init__(message)


@dataclass(frozen=True)
class GeneralPencil:
    """A square pencil ``A - lambda B`` with a declared spectral split m/n."""

    A: np.ndarray
    B: np.ndarray
    m: int
    n: int

    def __post_init__(self):
        a = frozen(self.A)
        b = frozen(self.B)
        if a.shape != b.shape or a.shape[0] != a.shape[1]:
            raise ValueError(f"pencil matrices must be square and equal: {a.shape} vs {b.shape}")
        if self.m + self.n != a.shape[0]:
            raise ValueError(f"m + n = {self.m + self.n} does not match size {a.shape[0]}")
        if self.m < 1 or self.n < 1:
            raise ValueError("both split sizes must be at least 1")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)

    @property
    def size(self) -> int:
        return self.m + self.n


@dataclass(frozen=True)
class SfqPencil:
    """One pencil of the doubling sequence, in Q-standard form."""

    m: int
    n: int
    E: np.ndarray
    F: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    Q1: Permutation
    Q2: Permutation

    def __post_init__(self):
        m, n = self.m, self.n
        for name, mat, shape in (
            ("E", self.E, (m, m)),
            ("F", self.F, (n, n)),
            ("X", self.X, (n, m)),
            ("Y", self.Y, (m, n)),
        ):
            mat = frozen(mat)
            if mat.shape != shape:
                raise ValueError(f"{name} has shape {mat.shape}, expected {shape}")
            object.__setattr__(self, name, mat)
        if self.Q1.n != m + n or self.Q2.n != m + n:
            raise ValueError("Q1 and Q2 must be permutations of size m + n")

    @property
    def size(self) -> int:
        return self.m + self.n

    def max_abs_x(self) -> float:
        return float(np.abs(self.X).max(initial=0.0))

    def max_abs_y(self) -> float:
        return float(np.abs(self.Y).max(initial=0.0))


@dataclass(frozen=True)
class QBlocks:
    """The four blocks of the permutation matrix ``Q1 @ Q2.T``."""

    Q11: np.ndarray
    Q12: np.ndarray
    Q21: np.ndarray
    Q22: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.block([[self.Q11, self.Q12], [self.Q21, self.Q22]])


def structured_a(p: SfqPencil) -> np.ndarray:
    """The left factor ``[[E, 0], [-X, I]]`` (that is, ``A_i @ Q1.T``)."""
    m, n = p.m, p.n
    out = np.zeros((m + n, m + n), dtype=np.complex128)
    out[:m, :m] = p.E
    out[m:, :m] = -p.X
    out[m:, m:] = np.eye(n)
    return out


def structured_b(p: SfqPencil) -> np.ndarray:
    """The left factor ``[[I, -Y], [0, F]]`` (that is, ``B_i @ Q2.T``)."""
    m, n = p.m, p.n
    out = np.zeros((m + n, m + n), dtype=np.complex128)
    out[:m, :m] = np.eye(m)
    out[:m, m:] = -p.Y
    out[m:, m:] = p.F
    return out


def assemble(p: SfqPencil) -> tuple[np.ndarray, np.ndarray]:
    """Dense ``(A_i, B_i)`` with the structured zero/identity blocks exact."""
    a = structured_a(p)[:, p.Q1.inverse().image]
    b = structured_b(p)[:, p.Q2.inverse().image]
    return a, b


def extract_blocks(a: np.ndarray, b: np.ndarray, q1: Permutation, q2: Permutation,
                   m: int, n: int) -> SfqPencil:
    """Inverse of :func:`assemble`: recover ``(E, F, X, Y)`` from dense A, B."""
    sa = as_complex_matrix(a)[:, q1.image]
    sb = as_complex_matrix(b)[:, q2.image]
    return SfqPencil(m=m, n=n, E=sa[:m, :m], F=sb[m:, m:],
                     X=-sa[m:, :m], Y=-sb[:m, m:], Q1=q1, Q2=q2)


def q_blocks(q1: Permutation, q2: Permutation, m: int, n: int) -> QBlocks:
    """Blocks of ``Q1 @ Q2.T``, each an exact 0/1 complex matrix."""
    if q1.n != m + n or q2.n != m + n:
        raise ValueError("permutation sizes must equal m + n")
    prod = q1.compose(q2.inverse())
    dense = np.zeros((m + n, m + n), dtype=np.complex128)
    dense[np.arange(m + n), prod.image] = 1.0
    return QBlocks(Q11=dense[:m, :m], Q12=dense[:m, m:],
                   Q21=dense[m:, :m], Q22=dense[m:, m:])


def q_blocks_of(p: SfqPencil) -> QBlocks:
    return q_blocks(p.Q1, p.Q2, p.m, p.n)


def swap_perm(m: int, n: int) -> Permutation:
    """The block-swap permutation ``[[0, I_m], [I_n, 0]]`` of size m + n."""
    return Permutation(np.concatenate([np.arange(n, n + m), np.arange(n)]))


def dual(p: SfqPencil) -> SfqPencil:
    """The dual pencil: sizes swapped, E<->F, X<->Y, Q's conjugated by the swap.

    Assembling the dual gives exactly ``Pi.T @ B_i @ Pi`` and
    ``Pi.T @ A_i @ Pi`` where ``Pi`` is the block swap, so eigenvalues map to
    their reciprocals.  ``dual(dual(p)) == p`` holds exactly.
    """
    pi = swap_perm(p.m, p.n)
    pi_inv = pi.inverse()
    q1d = pi_inv.compose(p.Q2).compose(pi)
    q2d = pi_inv.compose(p.Q1).compose(pi)
    return SfqPencil(m=p.n, n=p.m, E=p.F, F=p.E, X=p.Y, Y=p.X, Q1=q1d, Q2=q2d)


# ---------------------------------------------------------------------------
# Residual functionals
# ---------------------------------------------------------------------------


def primal_eig_residual(p: SfqPencil, x: np.ndarray, mpow: np.ndarray) -> float:
    """Residual of ``A_i Q1^T [I; X] = B_i Q1^T [I; X] M`` for a supplied M.

    Normalized by ``max(1, ||[I; X]||_F)``.
    """
    x = as_complex_matrix(x)
    a, b = assemble(p)
    zs = np.vstack([np.eye(p.m, dtype=np.complex128), x])
    z = permute_rows(p.Q1, zs, transpose=True)
    res = a @ z - (b @ z) @ as_complex_matrix(mpow)
    znorm = float(np.linalg.norm(zs))
    return float(np.linalg.norm(res)) / max(1.0, znorm)


def primal_nme_residual(p0: SfqPencil, x: np.ndarray) -> float:
    """Residual of the primal fixed-point equation at a candidate solution X.

    The equation reads
    ``X = X0 + F0 (Q12^T + Q22^T X) [Q11^T - Y0 Q12^T + (Q21^T - Y0 Q22^T) X]^{-1} E0``
    and the residual is normalized by ``max(1, ||X||_F)``.
    """
    x = as_complex_matrix(x)
    qb = q_blocks_of(p0)
    bracket = (qb.Q11.T - p0.Y @ qb.Q12.T) + (qb.Q21.T - p0.Y @ qb.Q22.T) @ x
    rhs = p0.X + p0.F @ (qb.Q12.T + qb.Q22.T @ x) @ lu_solve(bracket, p0.E)
    return float(np.linalg.norm(x - rhs)) / max(1.0, float(np.linalg.norm(x)))


def dual_nme_residual(p0: SfqPencil, y: np.ndarray) -> float:
    """Residual of the dual fixed-point equation at a candidate solution Y."""
    y = as_complex_matrix(y)
    qb = q_blocks_of(p0)
    bracket = (qb.Q22 - p0.X @ qb.Q12) + (qb.Q21 - p0.X @ qb.Q11) @ y
    rhs = p0.Y + p0.E @ (qb.Q12 + qb.Q11 @ y) @ lu_solve(bracket, p0.F)
    return float(np.linalg.norm(y - rhs)) / max(1.0, float(np.linalg.norm(y)))


def orthonormal_residual(a: np.ndarray, b: np.ndarray | None, z: np.ndarray) -> float:
    """Normalized eigen-residual of span(z) for ``A v = lambda B v``.

    The basis is orthonormalized first, the block Rayleigh quotient solved in
    least squares against ``B U``, and the result scaled by
    ``sqrt(p) * (two_est(A) + two_est(M) * two_est(B))``.  With ``b=None``
    (standard problem) this is the conditioning-robust normalized residual.
    """
    from .linalg import lu_solve as _solve, thin_qr, two_est

    a = as_complex_matrix(a)
    u, _ = thin_qr(as_complex_matrix(z))
    au = a @ u
    bu = u if b is None else as_complex_matrix(b) @ u
    gram = bu.conj().T @ bu
    mray = _solve(gram, bu.conj().T @ au)
    num = float(np.linalg.norm(au - bu @ mray))
    b_est = 1.0 if b is None else two_est(b)
    den = np.sqrt(u.shape[1]) * (two_est(a) + two_est(mray) * b_est)
    return num / den
