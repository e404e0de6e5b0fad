"""Randomized block subsampling Kaczmarz-Motzkin solver for consistent
linear systems, with convergence diagnostics and a benchmark harness."""

from .cgls import InnerSolveConfig, InnerSolveStats, cgls_min_norm
from .diagnostics import (
    OpCountInputs,
    RateBound,
    TrendPoint,
    XiEstimate,
    estimate_xi,
    interlacing_check,
    op_count,
    rate_bound,
    reference_solution,
    write_trend_csv,
    xi_trend_study,
)
from .errors import (
    CapabilityError,
    DegenerateMatrixError,
    DimensionError,
    MatrixMarketError,
    RbskmError,
    StalledIteration,
    XiUndefinedError,
)
from .matrixmarket import load_matrix_market, save_matrix_market
from .problems import (
    GeneratorSpec,
    LinearSystem,
    generate,
    load_system,
    make_consistent_system,
)
from .rng import RngStream, derived_seed
from .sampling import IndexSet, sample_uniform_subset, top_delta
from .solver import (
    BLOCK_PROJECTION,
    PSEUDOINVERSE_FREE,
    RunReport,
    SolverConfig,
    SolverState,
    StepRecord,
    init_state,
    pif_step,
    preset,
    solve,
    step,
)
from .sparse import (
    RowBlock,
    SparseMatrix,
    SpectrumEstimate,
    estimate_spectrum,
    row_gather,
)

__version__ = "1.0.0"
