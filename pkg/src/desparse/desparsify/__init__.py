"""Fractional sparsifier recovery, rounding, and the composed de-sparsification pipelines."""
from .program import (
    EllipsoidReport,
    InfeasibleProgram,
    Ok,
    ProgramSpec,
    Violation,
    ellipsoid_feasibility,
    fractional_sparsifier,
    separation_oracle,
)
from .rounding import (
    ExactRounding,
    RoundingExhausted,
    bernoulli_counts,
    exact_count_probability,
    round_bernoulli,
    round_exact_weight,
)
from .pipelines import (
    COMPOSED_BAND,
    Desparsified,
    PreconditionWarning,
    Provenance,
    desparsify_cut,
    desparsify_from_sketch,
    desparsify_spectral,
    desparsify_spectral_from_sketch,
    program_band,
)
