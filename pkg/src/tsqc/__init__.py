"""Time-symmetric quantum counterfactuals for pre- and post-selected systems.

Analytic rules (predictive/retrodictive Born, ABL, Kastner's rival rule) plus
a Monte Carlo oracle that estimates the same quantities by simulating runs and
discarding those that fail the selection criteria.
"""

from tsqc.errors import (
    DimensionMismatch,
    ImpossiblePostselection,
    InvalidMeasurement,
    LabelMismatch,
    ParseError,
    RankError,
    TSQCError,
    ValidationError,
    ZeroOverlap,
    ZeroVector,
)
from tsqc.hilbert import (
    Ket,
    Projector,
    ProjectiveMeasurement,
    TwoState,
    apply_projector,
    inner,
    normalize,
    validate_measurement,
)
from tsqc.rules import (
    DensityMatrix,
    Distribution,
    OutcomeWeights,
    abl,
    born_predictive,
    born_retrodictive,
    kastner_rule,
    mixture_at_t,
)

__version__ = "0.1.0"

__all__ = [
    "DensityMatrix",
    "DimensionMismatch",
    "Distribution",
    "ImpossiblePostselection",
    "InvalidMeasurement",
    "Ket",
    "LabelMismatch",
    "OutcomeWeights",
    "ParseError",
    "Projector",
    "ProjectiveMeasurement",
    "RankError",
    "TSQCError",
    "TwoState",
    "ValidationError",
    "ZeroOverlap",
    "ZeroVector",
    "abl",
    "apply_projector",
    "born_predictive",
    "born_retrodictive",
    "inner",
    "kastner_rule",
    "mixture_at_t",
    "normalize",
    "validate_measurement",
]
