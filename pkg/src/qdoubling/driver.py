"""End-to-end drivers: the Q-doubling algorithm and the classical baselines.

``run_qda`` reduces a general pencil to Q-standard form, iterates the
doubling kernel with the magnitude guard after every step, and terminates on
a Kahan (or plain) update criterion backed by a residual safeguard against
false convergence.  ``run_sdasf1`` / ``run_sdasf2`` iterate the classical
fixed-Q kernels with no guard, reporting non-finite blow-ups as breakdowns.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .doubling import Kernel, StopMode, check_stop, select_kernel, step, step_sf1, step_sf2
from .guard import GuardConfig, GuardReport, guard
from .linalg import Permutation, RankDeficientError, SingularMatrixError, permute_rows
from .reduction import Idea, InitReport, Variant, closed_form_init, reduce_with_fallback, reinit
from .sfq import (
    BreakdownError,
    GeneralPencil,
    SfqPencil,
    assemble,
    orthonormal_residual,
    swap_perm,
)


class RunStatus(enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    BREAKDOWN = "breakdown"


@dataclass(frozen=True)
class QdaConfig:
    rtol: float = 1e-14
    max_iter: int = 50
    stop_mode: StopMode = StopMode.KAHAN
    guard: Optional[GuardConfig] = None      # None -> sized from the pencil
    use_guard: bool = True
    init_idea: Idea = Idea.IDEA3
    init_variant: Variant = Variant.A_FIRST
    residual_safeguard: bool = True

    def __post_init__(self):
        if self.rtol <= 0:
            raise ValueError("rtol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")

    def guard_for(self, m: int, n: int) -> Optional[GuardConfig]:
        if not self.use_guard:
            return None
        return self.guard if self.guard is not None else GuardConfig.for_sizes(m, n)


@dataclass(frozen=True)
class IterationRecord:
    index: int
    abs_update_x: float
    rel_update_x: float
    norm_e: float
    norm_f: float
    norm_x: float
    norm_y: float
    w_condition: float
    w_min_pivot: float
    kernel: Kernel
    guard_events: GuardReport
    pencil: SfqPencil = field(repr=False)


@dataclass(frozen=True)
class QdaResult:
    phi: Optional[np.ndarray]
    psi: Optional[np.ndarray]
    q1: Optional[Permutation]
    q2: Optional[Permutation]
    history: tuple[IterationRecord, ...]
    status: RunStatus
    initial: Optional[SfqPencil] = None
    final: Optional[SfqPencil] = None
    init_report: Optional[InitReport] = None
    message: str = ""

    @property
    def iterations(self) -> int:
        return len(self.history)


def sfq_basis(p: SfqPencil, x: Optional[np.ndarray] = None) -> np.ndarray:
    """``Q1^T [I; X]`` assembled by pure entry moves."""
    x = p.X if x is None else x
    stacked = np.vstack([np.eye(p.m, dtype=np.complex128), x])
    return permute_rows(p.Q1, stacked, transpose=True)


def anti_basis(p: SfqPencil, y: Optional[np.ndarray] = None) -> np.ndarray:
    """``Q2^T [Y; I]`` assembled by pure entry moves."""
    y = p.Y if y is None else y
    stacked = np.vstack([y, np.eye(p.n, dtype=np.complex128)])
    return permute_rows(p.Q2, stacked, transpose=True)


def _all_finite(p: SfqPencil) -> bool:
    return all(bool(np.isfinite(block).all()) for block in (p.E, p.F, p.X, p.Y))


def _safeguard_ok(p: SfqPencil, rtol: float,
                  reference: tuple[np.ndarray, np.ndarray]) -> bool:
    """Residual backstop before declaring convergence."""
    try:
        res = orthonormal_residual(reference[0], reference[1], sfq_basis(p))
    except (RankDeficientError, SingularMatrixError):
        return False
    return res <= math.sqrt(rtol)


def _relative(delta: float, norm_x: float) -> float:
    if norm_x > 0.0:
        return delta / norm_x
    return 0.0 if delta == 0.0 else math.inf


def run_sdasfq(p0: SfqPencil, cfg: QdaConfig,
               reference: Optional[tuple[np.ndarray, np.ndarray]] = None,
               init_report: Optional[InitReport] = None) -> QdaResult:
    """Doubling loop on an already-reduced pencil (guard included)."""
    guard_cfg = cfg.guard_for(p0.m, p0.n)
    if reference is None:
        reference = assemble(p0)
    p = p0
    diffs: list[float] = []
    history: list[IterationRecord] = []
    status = RunStatus.MAX_ITER
    message = ""
    reinit_used = False
    kernel_switched = False
    it = 0
    while it < cfg.max_iter:
        it += 1
        kernel = select_kernel(p.m, p.n)
        if kernel_switched:
            kernel = Kernel.WTILDE if kernel is Kernel.W else Kernel.W
        try:
            outcome = step(p, kernel)
        except BreakdownError as exc:
            # Recovery policy: one re-reduction, then one kernel switch.
            if not reinit_used:
                reinit_used = True
                try:
                    p = reinit(p, cfg.init_idea, cfg.init_variant).pencil
                    it -= 1
                    continue
                except BreakdownError:
                    pass
            if not kernel_switched:
                kernel_switched = True
                it -= 1
                continue
            status = RunStatus.BREAKDOWN
            message = f"iteration {it}: {exc}"
            break
        if not _all_finite(outcome.next):
            status = RunStatus.BREAKDOWN
            message = f"non-finite iterate at iteration {it}"
            break
        delta = float(np.linalg.norm(outcome.next.X - p.X))
        if guard_cfg is not None:
            accepted, greport = guard(outcome.next, guard_cfg)
        else:
            accepted, greport = outcome.next, GuardReport()
        norm_x = float(np.linalg.norm(accepted.X))
        history.append(IterationRecord(
            index=it, abs_update_x=delta, rel_update_x=_relative(delta, norm_x),
            norm_e=float(np.linalg.norm(accepted.E)),
            norm_f=float(np.linalg.norm(accepted.F)),
            norm_x=norm_x, norm_y=float(np.linalg.norm(accepted.Y)),
            w_condition=outcome.w_condition, w_min_pivot=outcome.w_min_pivot,
            kernel=outcome.kernel, guard_events=greport, pencil=accepted,
        ))
        diffs.append(delta)
        p = accepted
        if greport.acted:
            continue  # coordinates changed; the update norm is not comparable
        if check_stop(diffs, norm_x, cfg.rtol, cfg.stop_mode):
            if not cfg.residual_safeguard or _safeguard_ok(p, cfg.rtol, reference):
                status = RunStatus.CONVERGED
                break
    return QdaResult(phi=p.X, psi=p.Y, q1=p.Q1, q2=p.Q2, history=tuple(history),
                     status=status, initial=p0, final=p,
                     init_report=init_report, message=message)


def run_qda(g: GeneralPencil, cfg: QdaConfig = QdaConfig()) -> QdaResult:
    """Full pipeline on a disk-split pencil: reduce, iterate, guard, stop."""
    try:
        report = reduce_with_fallback(g, cfg.init_idea, cfg.init_variant)
    except BreakdownError as exc:
        return QdaResult(phi=None, psi=None, q1=None, q2=None, history=(),
                         status=RunStatus.BREAKDOWN, message=f"initialization: {exc}")
    return run_sdasfq(report.pencil, cfg, reference=(g.A, g.B), init_report=report)


# ---------------------------------------------------------------------------
# Classical baselines
# ---------------------------------------------------------------------------


def _run_fixed_q(p0: SfqPencil, cfg: QdaConfig, stepper, kernel: Kernel) -> QdaResult:
    reference = assemble(p0)
    p = p0
    diffs: list[float] = []
    history: list[IterationRecord] = []
    status = RunStatus.MAX_ITER
    message = ""
    for it in range(1, cfg.max_iter + 1):
        try:
            e, f, x, y = stepper(p.E, p.F, p.X, p.Y)
        except BreakdownError as exc:
            status = RunStatus.BREAKDOWN
            message = f"iteration {it}: {exc}"
            break
        if not all(bool(np.isfinite(b).all()) for b in (e, f, x, y)):
            status = RunStatus.BREAKDOWN
            message = f"non-finite iterate at iteration {it}"
            break
        delta = float(np.linalg.norm(x - p.X))
        p = SfqPencil(m=p.m, n=p.n, E=e, F=f, X=x, Y=y, Q1=p.Q1, Q2=p.Q2)
        norm_x = float(np.linalg.norm(p.X))
        history.append(IterationRecord(
            index=it, abs_update_x=delta, rel_update_x=_relative(delta, norm_x),
            norm_e=float(np.linalg.norm(p.E)), norm_f=float(np.linalg.norm(p.F)),
            norm_x=norm_x, norm_y=float(np.linalg.norm(p.Y)),
            w_condition=math.nan, w_min_pivot=math.nan,
            kernel=kernel, guard_events=GuardReport(), pencil=p,
        ))
        diffs.append(delta)
        if check_stop(diffs, norm_x, cfg.rtol, cfg.stop_mode):
            if not cfg.residual_safeguard or _safeguard_ok(p, cfg.rtol, reference):
                status = RunStatus.CONVERGED
                break
    return QdaResult(phi=p.X, psi=p.Y, q1=p.Q1, q2=p.Q2, history=tuple(history),
                     status=status, initial=p0, final=p, message=message)


def run_sdasf1(e0: np.ndarray, f0: np.ndarray, x0: np.ndarray, y0: np.ndarray,
               cfg: QdaConfig = QdaConfig()) -> QdaResult:
    """Classical first-standard-form doubling: fixed identity permutations."""
    m, n = e0.shape[0], f0.shape[0]
    ident = Permutation.identity(m + n)
    p0 = SfqPencil(m=m, n=n, E=e0, F=f0, X=x0, Y=y0, Q1=ident, Q2=ident)
    return _run_fixed_q(p0, cfg, step_sf1, Kernel.SF1)


def run_sdasf2(e0: np.ndarray, f0: np.ndarray, x0: np.ndarray, y0: np.ndarray,
               cfg: QdaConfig = QdaConfig()) -> QdaResult:
    """Classical second-standard-form doubling (requires m = n)."""
    n = e0.shape[0]
    if f0.shape[0] != n:
        raise ValueError("the second standard form requires m = n")
    p0 = SfqPencil(m=n, n=n, E=e0, F=f0, X=x0, Y=y0,
                   Q1=Permutation.identity(2 * n), Q2=swap_perm(n, n))
    return _run_fixed_q(p0, cfg, step_sf2, Kernel.SF2)


def sdasf1_init(g: GeneralPencil) -> SfqPencil:
    """Closed-form reduction with both permutations fixed to the identity."""
    ident = Permutation.identity(g.size)
    return closed_form_init(g, ident, ident)


def sdasf2_init(g: GeneralPencil) -> SfqPencil:
    """Closed-form reduction onto the second standard form (m = n)."""
    if g.m != g.n:
        raise ValueError("the second standard form requires m = n")
    return closed_form_init(g, Permutation.identity(g.size), swap_perm(g.m, g.n))


def run_sdasf1_on(g: GeneralPencil, cfg: QdaConfig = QdaConfig()) -> QdaResult:
    try:
        p0 = sdasf1_init(g)
    except SingularMatrixError as exc:
        return QdaResult(phi=None, psi=None, q1=None, q2=None, history=(),
                         status=RunStatus.BREAKDOWN,
                         message=f"SF1 initialization: {exc}")
    return run_sdasf1(p0.E, p0.F, p0.X, p0.Y, cfg)


def run_sdasf2_on(g: GeneralPencil, cfg: QdaConfig = QdaConfig()) -> QdaResult:
    try:
        p0 = sdasf2_init(g)
    except SingularMatrixError as exc:
        return QdaResult(phi=None, psi=None, q1=None, q2=None, history=(),
                         status=RunStatus.BREAKDOWN,
                         message=f"SF2 initialization: {exc}")
    return run_sdasf2(p0.E, p0.F, p0.X, p0.Y, cfg)


# ---------------------------------------------------------------------------
# Rate-measurement helpers
# ---------------------------------------------------------------------------


def asymptotic_window(history: tuple[IterationRecord, ...] | list[IterationRecord],
                      start_rel: float = 1e-2,
                      floor_factor: float = 1e2) -> tuple[int, int] | None:
    """Index range (inclusive) of records inside the asymptotic regime.

    Starts at the first record whose absolute update falls below
    ``start_rel * ||X||`` and ends before updates sink under
    ``floor_factor * eps * ||X||`` (roundoff stagnation).
    """
    eps = float(np.finfo(np.float64).eps)
    lo = None
    for idx, rec in enumerate(history):
        if rec.abs_update_x < start_rel * max(rec.norm_x, 1e-300):
            lo = idx
            break
    if lo is None:
        return None
    hi = lo
    for idx in range(lo, len(history)):
        rec = history[idx]
        if rec.abs_update_x < floor_factor * eps * max(rec.norm_x, 1e-300):
            break
        hi = idx
    return lo, hi
