"""Sparse non-Hermitian random matrices: structure and spectral radius."""

__version__ = "0.1.0"

from .digraph import (  # noqa: E402
    StructureReport,
    classify_components,
    cycle_count_ge,
    scc_decompose,
    structure_report,
)
from .ensemble import (  # noqa: E402
    Constant,
    EnsembleParams,
    Rademacher,
    SparseMatrix,
    StandardNormal,
    Weibull,
    derive_trial_seed,
    sample_mask,
    sample_matrix,
)
from .spectral import (  # noqa: E402
    RadiusBounds,
    estimate_radius,
    gelfand_upper,
    kostin_lower,
    structural_radius,
)
