"""Permutation-augmented structure-preserving doubling for matrix pencils."""

from .doubling import (
    Kernel,
    StepOutcome,
    StopMode,
    check_stop,
    compute_w,
    compute_wt,
    select_kernel,
    step,
    step_sf1,
    step_sf2,
    step_w,
    step_wt,
)
from .driver import (
    IterationRecord,
    QdaConfig,
    QdaResult,
    RunStatus,
    anti_basis,
    asymptotic_window,
    run_qda,
    run_sdasf1,
    run_sdasf1_on,
    run_sdasf2,
    run_sdasf2_on,
    run_sdasfq,
    sdasf1_init,
    sdasf2_init,
    sfq_basis,
)
from .eig import (
    CayleyParams,
    EigenspaceBases,
    bases_from_result,
    cayley,
    cayley_map,
    nres1,
    nres2,
    rho_gamma,
    solve_halfplane,
)
from .guard import (
    GuardAction,
    GuardConfig,
    GuardReport,
    ZeroPivotError,
    action_x,
    action_y,
    default_tau,
    find_violation,
    guard,
)
from .linalg import (
    LUFactors,
    MatrixNorms,
    Permutation,
    RankDeficientError,
    SingularMatrixError,
    lu_factor,
    lu_solve,
    matmul,
    norms,
    permute_cols,
    permute_rows,
    thin_qr,
    two_est,
)
from .problems import (
    CriticalSpec,
    JordanOverflowError,
    ProblemInstance,
    SolvedSfqInstance,
    gamma_block,
    gen_bse_like,
    gen_critical,
    gen_random_split,
    gen_solved_sfq,
    ground_truth_residual,
    jordan_power,
    known_eigenpairs,
)
from .reduction import (
    Idea,
    InitReport,
    Variant,
    closed_form_init,
    reduce_idea1,
    reduce_idea2,
    reduce_idea3,
    reduce_pencil,
    reduce_with_fallback,
    reinit,
)
from .sfq import (
    BreakdownError,
    GeneralPencil,
    QBlocks,
    SfqPencil,
    assemble,
    dual,
    dual_nme_residual,
    extract_blocks,
    orthonormal_residual,
    primal_eig_residual,
    primal_nme_residual,
    q_blocks,
    q_blocks_of,
    swap_perm,
)

__version__ = "0.1.0"
