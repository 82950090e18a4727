"""Structure-preserving doubling kernels and stopping rules.

Two equivalent update rules advance a Q-standard-form pencil one doubling
step: one solves with the n-by-n matrix ``W``, the other with the m-by-m
matrix ``Wt``.  Either is nonsingular exactly when the other is, and both
produce the same next pencil.  With ``Q1 = Q2 = I`` the W-rule collapses to
the classical SDASF1 update, and with ``Q1 @ Q2.T`` equal to the block swap
(m = n) to SDASF2.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import SingularMatrixError, lu_factor
from .sfq import BreakdownError, QBlocks, SfqPencil, q_blocks_of


class Kernel(enum.Enum):
    W = "w"
    WTILDE = "wtilde"
    SF1 = "sf1"
    SF2 = "sf2"


@dataclass(frozen=True)
class StepOutcome:
    next: SfqPencil
    w_condition: float
    w_min_pivot: float
    kernel: Kernel


def compute_w(p: SfqPencil, qb: QBlocks | None = None) -> np.ndarray:
    """``W = Q22 - X Q12 + (Q21 - X Q11) Y``  (n-by-n)."""
    qb = qb or q_blocks_of(p)
    return qb.Q22 - p.X @ qb.Q12 + (qb.Q21 - p.X @ qb.Q11) @ p.Y


def compute_wt(p: SfqPencil, qb: QBlocks | None = None) -> np.ndarray:
    """``Wt = Q11^T - Y Q12^T + (Q21^T - Y Q22^T) X``  (m-by-m)."""
    qb = qb or q_blocks_of(p)
    return qb.Q11.T - p.Y @ qb.Q12.T + (qb.Q21.T - p.Y @ qb.Q22.T) @ p.X


def step_w(p: SfqPencil, qb: QBlocks | None = None) -> StepOutcome:
    """One doubling step through the n-by-n solve."""
    qb = qb or q_blocks_of(p)
    w = compute_w(p, qb)
    try:
        factors = lu_factor(w)
    except SingularMatrixError as exc:
        raise BreakdownError("doubling step (W solve)", str(exc)) from exc
    xq_min_q21 = p.X @ qb.Q11 - qb.Q21          # n x m
    q11y_q12 = qb.Q11 @ p.Y + qb.Q12            # m x n
    winv_xq = factors.solve(xq_min_q21)         # W^{-1} (X Q11 - Q21)
    winv_f = factors.solve(p.F)                 # W^{-1} F
    e_next = p.E @ (qb.Q11 + q11y_q12 @ winv_xq) @ p.E
    f_next = p.F @ winv_f
    x_next = p.X + p.F @ winv_xq @ p.E
    y_next = p.Y + p.E @ q11y_q12 @ winv_f
    nxt = SfqPencil(m=p.m, n=p.n, E=e_next, F=f_next, X=x_next, Y=y_next,
                    Q1=p.Q1, Q2=p.Q2)
    return StepOutcome(nxt, factors.condition_estimate, factors.min_pivot, Kernel.W)


def step_wt(p: SfqPencil, qb: QBlocks | None = None) -> StepOutcome:
    """One doubling step through the m-by-m solve."""
    qb = qb or q_blocks_of(p)
    wt = compute_wt(p, qb)
    try:
        factors = lu_factor(wt)
    except SingularMatrixError as exc:
        raise BreakdownError("doubling step (Wt solve)", str(exc)) from exc
    q22x_q12 = qb.Q22.T @ p.X + qb.Q12.T        # n x m
    yq_min_q21 = p.Y @ qb.Q22.T - qb.Q21.T      # m x n
    wtinv_e = factors.solve(p.E)                # Wt^{-1} E
    wtinv_yq = factors.solve(yq_min_q21)        # Wt^{-1} (Y Q22^T - Q21^T)
    e_next = p.E @ wtinv_e
    f_next = p.F @ (qb.Q22.T + q22x_q12 @ wtinv_yq) @ p.F
    x_next = p.X + p.F @ q22x_q12 @ wtinv_e
    y_next = p.Y + p.E @ wtinv_yq @ p.F
    nxt = SfqPencil(m=p.m, n=p.n, E=e_next, F=f_next, X=x_next, Y=y_next,
                    Q1=p.Q1, Q2=p.Q2)
    return StepOutcome(nxt, factors.condition_estimate, factors.min_pivot, Kernel.WTILDE)


def select_kernel(m: int, n: int) -> Kernel:
    """Solve with the smaller matrix: W (n-by-n) unless n > m."""
    return Kernel.W if n <= m else Kernel.WTILDE


def step(p: SfqPencil, kernel: Kernel | None = None) -> StepOutcome:
    kernel = kernel or select_kernel(p.m, p.n)
    if kernel is Kernel.W:
        return step_w(p)
    if kernel is Kernel.WTILDE:
        return step_wt(p)
    raise ValueError(f"not a pencil-level kernel: {kernel}")


# ---------------------------------------------------------------------------
# Classical specializations
# ---------------------------------------------------------------------------


def step_sf1(e: np.ndarray, f: np.ndarray, x: np.ndarray, y: np.ndarray):
    """One SDASF1 step: the Q1 = Q2 = I specialization.

    Returns ``(e_next, f_next, x_next, y_next)``; raises
    :class:`BreakdownError` when ``I - XY`` or ``I - YX`` is singular.
    """
    n = x.shape[0]
    m = y.shape[0]
    try:
        w = lu_factor(np.eye(n, dtype=np.complex128) - x @ y)
        wt = lu_factor(np.eye(m, dtype=np.complex128) - y @ x)
    except SingularMatrixError as exc:
        raise BreakdownError("SF1 step", str(exc)) from exc
    e_next = e @ wt.solve(e)
    f_next = f @ w.solve(f)
    x_next = x + f @ w.solve(x @ e)
    y_next = y + e @ (y @ w.solve(f))
    return e_next, f_next, x_next, y_next


def step_sf2(e: np.ndarray, f: np.ndarray, x: np.ndarray, y: np.ndarray):
    """One SDASF2 step: the block-swap specialization (requires m = n)."""
    if x.shape != y.shape or x.shape[0] != x.shape[1]:
        raise ValueError("SF2 requires square X and Y of equal size")
    try:
        d = lu_factor(x - y)
    except SingularMatrixError as exc:
        raise BreakdownError("SF2 step", str(exc)) from exc
    e_next = e @ d.solve(e)
    f_next = -(f @ d.solve(f))
    x_next = x + f @ d.solve(e)
    y_next = y - e @ d.solve(f)
    return e_next, f_next, x_next, y_next


# ---------------------------------------------------------------------------
# Stopping rules
# ---------------------------------------------------------------------------


class StopMode(enum.Enum):
    PLAIN = "plain"
    KAHAN = "kahan"


def check_stop(diffs: Sequence[float], x_norm: float, rtol: float,
               mode: StopMode = StopMode.KAHAN) -> bool:
    """Decide termination from the update-norm history.

    ``diffs`` holds ``||X_i - X_{i-1}||_F`` in order.  The plain rule needs
    one difference; the Kahan rule needs two and a strictly positive
    denominator, falling back to the plain rule otherwise.
    """
    if not diffs:
        return False
    d_now = diffs[-1]
    plain = d_now <= rtol * x_norm
    if mode is StopMode.PLAIN or len(diffs) < 2:
        return plain
    denom = diffs[-2] - d_now
    if denom <= 0.0:
        return plain
    return d_now * d_now / denom <= rtol * x_norm
