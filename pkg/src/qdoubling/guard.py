"""Magnitude control for the iterates X and Y.

Whenever an entry of X or Y exceeds the threshold ``tau``, a single column
swap between the structured identity block and the offending column turns
the pencil into an equivalent one in which that entry is replaced by its
reciprocal.  The swap is a rank-one update of all four blocks plus a
transposition recorded in the corresponding permutation.  If repeated swaps
cannot bring the iterate under control, the guard escalates to a full
re-reduction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import SINGULARITY_TOL
from .reduction import Idea, Variant, reinit
from .sfq import SfqPencil


class ZeroPivotError(Exception):
    """The targeted entry is too small to serve as a swap pivot."""


def default_tau(m: int, n: int) -> float:
    """Entry-magnitude cap ``max(1e3, 10 * sqrt(n * m + 1))``."""
    if m < 1 or n < 1:
        raise ValueError("block sizes must be at least 1")
    return max(1.0e3, 10.0 * float(np.sqrt(float(n) * float(m) + 1.0)))


@dataclass(frozen=True)
class GuardConfig:
    tau: float
    max_actions_per_iteration: int
    escalate_to_reinit: bool = True
    reinit_idea: Idea = Idea.IDEA3
    reinit_variant: Variant = Variant.A_FIRST

    def __post_init__(self):
        if self.tau <= 1.0:
            raise ValueError("tau must exceed 1")

    @classmethod
    def for_sizes(cls, m: int, n: int) -> "GuardConfig":
        return cls(tau=default_tau(m, n), max_actions_per_iteration=m + n)


@dataclass(frozen=True)
class GuardAction:
    kind: str                      # "action_x" | "action_y" | "reinit"
    pivot: Optional[tuple[int, int]]
    max_before: float
    max_after: float


@dataclass(frozen=True)
class GuardReport:
    actions: tuple[GuardAction, ...] = field(default=())

    @property
    def acted(self) -> bool:
        return bool(self.actions)


@dataclass(frozen=True)
class Violation:
    which: str                     # "X" | "Y"
    row: int
    col: int
    magnitude: float


def find_violation(p: SfqPencil, tau: float) -> Optional[Violation]:
    """Largest entry of X or Y above ``tau``, ties broken toward X, row-major."""
    ax = np.abs(p.X)
    ay = np.abs(p.Y)
    best_x = float(ax.max(initial=0.0))
    best_y = float(ay.max(initial=0.0))
    best = max(best_x, best_y)
    if best <= tau:
        return None
    if best_x >= best_y:
        r, c = np.unravel_index(int(np.argmax(ax)), ax.shape)
        return Violation("X", int(r), int(c), best_x)
    r, c = np.unravel_index(int(np.argmax(ay)), ay.shape)
    return Violation("Y", int(r), int(c), best_y)


def action_x(p: SfqPencil, j: int, ell: int) -> SfqPencil:
    """Swap column ``ell`` of the X-block with identity column ``j``.

    Rank-one updates (with ``x = X[:, ell]``, ``h = E[:, ell]``,
    ``d = X[j, ell]``):

        X <- X + ((x + e_j)/d) (e_ell^T - e_j^T X)
        F <- F - ((x + e_j)/d) (e_j^T F)
        E <- E + (h/d) (e_ell^T - e_j^T X)
        Y <- Y - (h/d) (e_j^T F)

    and Q1 picks up the transposition of positions ``ell`` and ``m + j``.
    """
    x_col = p.X[:, ell].copy()
    d = p.X[j, ell]
    if abs(d) <= SINGULARITY_TOL * max(float(np.abs(p.X[j, :]).max()), 1e-300):
        raise ZeroPivotError(f"X[{j},{ell}] = {d} is too small to swap on")
    h = p.E[:, ell].copy()
    n = p.n
    u = x_col.copy()
    u[j] += 1.0                                   # x + e_j
    row_adj = -p.X[j, :].copy()                   # e_ell^T - e_j^T X
    row_adj[ell] += 1.0
    frow = p.F[j, :].copy()
    x_new = p.X + np.outer(u / d, row_adj)
    f_new = p.F - np.outer(u / d, frow)
    e_new = p.E + np.outer(h / d, row_adj)
    y_new = p.Y - np.outer(h / d, frow)
    q1_new = p.Q1.swapped(ell, p.m + j)
    return SfqPencil(m=p.m, n=n, E=e_new, F=f_new, X=x_new, Y=y_new,
                     Q1=q1_new, Q2=p.Q2)


def action_y(p: SfqPencil, j: int, ell: int) -> SfqPencil:
    """Mirror of :func:`action_x` for an oversized Y entry; updates Q2."""
    y_col = p.Y[:, ell].copy()
    d = p.Y[j, ell]
    if abs(d) <= SINGULARITY_TOL * max(float(np.abs(p.Y[j, :]).max()), 1e-300):
        raise ZeroPivotError(f"Y[{j},{ell}] = {d} is too small to swap on")
    h = p.F[:, ell].copy()
    u = y_col.copy()
    u[j] += 1.0                                   # y + e_j
    row_adj = -p.Y[j, :].copy()                   # e_ell^T - e_j^T Y
    row_adj[ell] += 1.0
    erow = p.E[j, :].copy()
    y_new = p.Y + np.outer(u / d, row_adj)
    e_new = p.E - np.outer(u / d, erow)
    f_new = p.F + np.outer(h / d, row_adj)
    x_new = p.X - np.outer(h / d, erow)
    q2_new = p.Q2.swapped(j, p.m + ell)
    return SfqPencil(m=p.m, n=p.n, E=e_new, F=f_new, X=x_new, Y=y_new,
                     Q1=p.Q1, Q2=q2_new)


def guard(p: SfqPencil, cfg: GuardConfig) -> tuple[SfqPencil, GuardReport]:
    """Apply swap actions (then, if needed, one re-reduction) until compliant.

    Returns the possibly updated pencil and a report of what was done.  A
    still-violating pencil after escalation is returned as best effort.
    """
    actions: list[GuardAction] = []
    current = p
    for _ in range(cfg.max_actions_per_iteration):
        violation = find_violation(current, cfg.tau)
        if violation is None:
            return current, GuardReport(tuple(actions))
        before = max(current.max_abs_x(), current.max_abs_y())
        if violation.which == "X":
            current = action_x(current, violation.row, violation.col)
            kind = "action_x"
        else:
            current = action_y(current, violation.row, violation.col)
            kind = "action_y"
        actions.append(GuardAction(kind=kind, pivot=(violation.row, violation.col),
                                   max_before=before,
                                   max_after=max(current.max_abs_x(), current.max_abs_y())))
    if find_violation(current, cfg.tau) is not None and cfg.escalate_to_reinit:
        before = max(current.max_abs_x(), current.max_abs_y())
        report = reinit(current, cfg.reinit_idea, cfg.reinit_variant)
        current = report.pencil
        actions.append(GuardAction(kind="reinit", pivot=None, max_before=before,
                                   max_after=max(current.max_abs_x(), current.max_abs_y())))
    return current, GuardReport(tuple(actions))
