"""Reduction of a general pencil to Q-standard form.

Given ``A' - lambda B'``, every routine here produces a left-equivalent
pencil ``[[E0, 0], [-X0, I]] Q1 - lambda [[I, -Y0], [0, F0]] Q2`` where the
permutations collect the column moves made while pivoting.  The left factor
itself is never materialized.

Three discovery strategies are provided:

* Idea 1 - eliminate one matrix completely, then the other, with the pivot
  search confined to the band of rows being triangularized;
* Idea 2 - like Idea 1 but the first matrix is pivoted over its entire
  active window, which tends to yield smaller ``X0`` and ``Y0``;
* Idea 3 - alternate single elimination steps between the two matrices,
  pivoting over the shrinking active window of each.

Each idea comes in two versions depending on which matrix is reduced first.
The A-side is triangularized bottom-up (its trailing n-by-n block becomes
lower triangular), the B-side top-down (leading m-by-m upper triangular);
a final scaling by the two triangular inverses produces the exact identity
blocks.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .linalg import Permutation, as_complex_matrix, lu_solve
from .sfq import BreakdownError, GeneralPencil, SfqPencil, structured_a, structured_b

#: Pivot-zero threshold, relative to the largest initial entry magnitude of
#: the matrix being eliminated.
PIVOT_TOL = 1e-13


class Idea(enum.Enum):
    CLOSED_FORM = "closed_form"
    IDEA1 = "idea1"
    IDEA2 = "idea2"
    IDEA3 = "idea3"


class Variant(enum.Enum):
    A_FIRST = "afirst"
    B_FIRST = "bfirst"


@dataclass(frozen=True)
class InitReport:
    pencil: SfqPencil
    idea: Idea
    variant: Variant
    max_abs_x: float
    max_abs_y: float
    pivot_growth: float


def closed_form_init(g: GeneralPencil, q1: Permutation, q2: Permutation) -> SfqPencil:
    """Reduce to Q-standard form for known permutations, in closed form.

    Solves one mixed linear system built from the blocks of ``A' Q1^T`` and
    ``B' Q2^T``.  A singular system means this ``(Q1, Q2)`` pair admits no
    such reduction; the :class:`SingularMatrixError` propagates.
    """
    m, n = g.m, g.n
    sa = g.A[:, q1.image]
    sb = g.B[:, q2.image]
    mixed = np.block([[sb[:m, :m], -sa[:m, m:]],
                      [sb[m:, :m], -sa[m:, m:]]])
    rhs = np.block([[-sa[:m, :m], sb[:m, m:]],
                    [-sa[m:, :m], sb[m:, m:]]])
    sol = -lu_solve(mixed, rhs)
    return SfqPencil(m=m, n=n, E=sol[:m, :m], F=sol[m:, m:],
                     X=sol[m:, :m], Y=sol[:m, m:], Q1=q1, Q2=q2)


class _Reducer:
    """Shared elimination engine for the three pivoted-reduction ideas.

    Row operations apply to both working matrices (they make up the implicit
    left factor); column swaps apply to one matrix only and are recorded in
    its permutation.  A-side steps fix rows from the bottom, B-side steps
    from the top, so completed rows and columns never move again.
    """

    def __init__(self, a: np.ndarray, b: np.ndarray, m: int, n: int, stage: str):
        self.m, self.n, self.size = m, n, m + n
        self.aw = as_complex_matrix(a).copy()
        self.bw = as_complex_matrix(b).copy()
        self.col_a = np.arange(self.size)
        self.col_b = np.arange(self.size)
        self.a_done = 0
        self.b_done = 0
        self.tol_a = PIVOT_TOL * max(float(np.abs(self.aw).max()), 1e-300)
        self.tol_b = PIVOT_TOL * max(float(np.abs(self.bw).max()), 1e-300)
        self.scale0 = max(float(np.abs(self.aw).max()), float(np.abs(self.bw).max()))
        self.growth = 1.0
        self.stage = stage

    def _track_growth(self):
        peak = max(float(np.abs(self.aw).max()), float(np.abs(self.bw).max()))
        self.growth = max(self.growth, peak / self.scale0)

    def _swap_rows(self, i: int, j: int):
        if i != j:
            self.aw[[i, j], :] = self.aw[[j, i], :]
            self.bw[[i, j], :] = self.bw[[j, i], :]

    def _swap_cols_a(self, i: int, j: int):
        if i != j:
            self.aw[:, [i, j]] = self.aw[:, [j, i]]
            self.col_a[[i, j]] = self.col_a[[j, i]]

    def _swap_cols_b(self, i: int, j: int):
        if i != j:
            self.bw[:, [i, j]] = self.bw[:, [j, i]]
            self.col_b[[i, j]] = self.col_b[[j, i]]

    @staticmethod
    def _pivot(window: np.ndarray, from_end: bool) -> tuple[int, int, float]:
        mags = np.abs(window)
        view = mags[::-1, ::-1] if from_end else mags
        flat = int(np.argmax(view))
        r, c = np.unravel_index(flat, view.shape)
        if from_end:
            r = view.shape[0] - 1 - r
            c = view.shape[1] - 1 - c
        return int(r), int(c), float(mags[r, c])

    def a_step(self, band_limited: bool):
        """One bottom-up elimination step on the A side."""
        t = self.size - 1 - self.a_done
        r0 = max(self.b_done, self.m) if band_limited else self.b_done
        r, c, mag = self._pivot(self.aw[r0:t + 1, :t + 1], from_end=True)
        if mag <= self.tol_a:
            raise BreakdownError(self.stage, f"A-side pivot {mag:.3e} at step {self.a_done + 1}")
        self._swap_rows(r0 + r, t)
        self._swap_cols_a(c, t)
        mult = self.aw[:t, t] / self.aw[t, t]
        self.aw[:t, :] -= np.outer(mult, self.aw[t, :])
        self.bw[:t, :] -= np.outer(mult, self.bw[t, :])
        self.aw[:t, t] = 0.0
        self.a_done += 1
        self._track_growth()

    def b_step(self, band_limited: bool):
        """One top-down elimination step on the B side."""
        t = self.b_done
        r1 = self.size - 1 - self.a_done
        if band_limited:
            r1 = min(r1, self.m - 1)
        r, c, mag = self._pivot(self.bw[t:r1 + 1, t:], from_end=False)
        if mag <= self.tol_b:
            raise BreakdownError(self.stage, f"B-side pivot {mag:.3e} at step {self.b_done + 1}")
        self._swap_rows(t + r, t)
        self._swap_cols_b(t + c, t)
        mult = self.bw[t + 1:, t] / self.bw[t, t]
        self.bw[t + 1:, :] -= np.outer(mult, self.bw[t, :])
        self.aw[t + 1:, :] -= np.outer(mult, self.aw[t, :])
        self.bw[t + 1:, t] = 0.0
        self.b_done += 1
        self._track_growth()

    def finish(self) -> tuple[SfqPencil, float]:
        """Scale out the two triangular factors and extract the blocks."""
        m = self.m
        lower = self.aw[m:, m:]
        upper = self.bw[:m, :m]
        e0 = _solve_upper(upper, self.aw[:m, :m])
        y0 = -_solve_upper(upper, self.bw[:m, m:])
        x0 = -_solve_lower(lower, self.aw[m:, :m])
        f0 = _solve_lower(lower, self.bw[m:, m:])
        pencil = SfqPencil(m=m, n=self.n, E=e0, F=f0, X=x0, Y=y0,
                           Q1=Permutation(self.col_a), Q2=Permutation(self.col_b))
        return pencil, self.growth


def _solve_lower(lo: np.ndarray, b: np.ndarray) -> np.ndarray:
    x = b.astype(np.complex128, copy=True)
    for k in range(lo.shape[0]):
        if k:
            x[k] -= lo[k, :k] @ x[:k]
        x[k] /= lo[k, k]
    return x


def _solve_upper(up: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = up.shape[0]
    x = b.astype(np.complex128, copy=True)
    for k in range(n - 1, -1, -1):
        if k < n - 1:
            x[k] -= up[k, k + 1:] @ x[k + 1:]
        x[k] /= up[k, k]
    return x


def _run_phased(red: _Reducer, variant: Variant, first_banded: bool, second_banded: bool):
    """Ideas 1 and 2: reduce one side completely, then the other."""
    phases = ["a", "b"] if variant is Variant.A_FIRST else ["b", "a"]
    for which, banded in zip(phases, (first_banded, second_banded)):
        if which == "a":
            for _ in range(red.n):
                red.a_step(band_limited=banded)
        else:
            for _ in range(red.m):
                red.b_step(band_limited=banded)


def _run_alternating(red: _Reducer, variant: Variant):
    """Idea 3: interleave single steps, finishing whichever side remains."""
    turn_a = variant is Variant.A_FIRST
    while red.a_done < red.n or red.b_done < red.m:
        if turn_a and red.a_done < red.n:
            red.a_step(band_limited=False)
        elif not turn_a and red.b_done < red.m:
            red.b_step(band_limited=False)
        turn_a = not turn_a


def reduce_pencil(g: GeneralPencil, idea: Idea = Idea.IDEA3,
                  variant: Variant = Variant.A_FIRST) -> InitReport:
    """Reduce ``g`` to Q-standard form with the requested idea and version."""
    if idea is Idea.CLOSED_FORM:
        raise ValueError("closed-form reduction needs explicit permutations; "
                         "call closed_form_init instead")
    red = _Reducer(g.A, g.B, g.m, g.n, stage=f"{idea.value} ({variant.value})")
    if idea is Idea.IDEA1:
        _run_phased(red, variant, first_banded=True, second_banded=True)
    elif idea is Idea.IDEA2:
        _run_phased(red, variant, first_banded=False, second_banded=True)
    else:
        _run_alternating(red, variant)
    pencil, growth = red.finish()
    return InitReport(pencil=pencil, idea=idea, variant=variant,
                      max_abs_x=pencil.max_abs_x(), max_abs_y=pencil.max_abs_y(),
                      pivot_growth=growth)


def reduce_idea1(g: GeneralPencil, variant: Variant = Variant.A_FIRST) -> InitReport:
    return reduce_pencil(g, Idea.IDEA1, variant)


def reduce_idea2(g: GeneralPencil, variant: Variant = Variant.A_FIRST) -> InitReport:
    return reduce_pencil(g, Idea.IDEA2, variant)


def reduce_idea3(g: GeneralPencil, variant: Variant = Variant.A_FIRST) -> InitReport:
    return reduce_pencil(g, Idea.IDEA3, variant)


#: Fallback order when a reduction breaks down: try the remaining ideas from
#: the most to the least robust pivoting, then switch the starting side.
_FALLBACK_IDEAS = (Idea.IDEA3, Idea.IDEA2, Idea.IDEA1)


def reduce_with_fallback(g: GeneralPencil, idea: Idea = Idea.IDEA3,
                         variant: Variant = Variant.A_FIRST) -> InitReport:
    other = Variant.B_FIRST if variant is Variant.A_FIRST else Variant.A_FIRST
    attempts = [(idea, variant)]
    for var in (variant, other):
        for cand in _FALLBACK_IDEAS:
            if (cand, var) not in attempts:
                attempts.append((cand, var))
    last_error: BreakdownError | None = None
    for cand, var in attempts:
        try:
            return reduce_pencil(g, cand, var)
        except BreakdownError as exc:
            last_error = exc
    raise BreakdownError("initialization", "all reduction attempts failed") from last_error


def reinit(p: SfqPencil, idea: Idea = Idea.IDEA3,
           variant: Variant = Variant.A_FIRST, fallback: bool = True) -> InitReport:
    """Re-reduce the current structured pair, composing the new column moves.

    The reduction runs on ``(A_i Q1^T, B_i Q2^T)`` so the permutations it
    discovers are composed on top of the existing ones.
    """
    g = GeneralPencil(A=structured_a(p), B=structured_b(p), m=p.m, n=p.n)
    if fallback:
        report = reduce_with_fallback(g, idea, variant)
    else:
        report = reduce_pencil(g, idea, variant)
    q = report.pencil
    composed = SfqPencil(m=p.m, n=p.n, E=q.E, F=q.F, X=q.X, Y=q.Y,
                         Q1=q.Q1.compose(p.Q1), Q2=q.Q2.compose(p.Q2))
    return InitReport(pencil=composed, idea=report.idea, variant=report.variant,
                      max_abs_x=report.max_abs_x, max_abs_y=report.max_abs_y,
                      pivot_growth=report.pivot_growth)
