"""Coupling-matrix synthesis and analysis for wideband transversal bandpass filters."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ExtractionError,
    FormatError,
    ReconfigurationError,
    SingularNetworkError,
    SynthesisError,
    XCouplerError,
)
from .matrix import CouplingMatrix, TopologyMask, normalize_signs  # noqa: E402
from .response import (  # noqa: E402
    FrequencyPlan,
    LossSpec,
    SParamSweep,
    denormalize_tz,
    group_delay,
    midband_insertion_loss,
    normalized_frequency,
    sparams,
)
from .prototype import (  # noqa: E402
    CharPoly,
    apply_rotation,
    reconfigure,
    synthesize_matrix,
    synthesize_polynomials,
    transversal_matrix,
)

__all__ = [
    "CharPoly",
    "CouplingMatrix",
    "ExtractionError",
    "FormatError",
    "FrequencyPlan",
    "LossSpec",
    "ReconfigurationError",
    "SParamSweep",
    "SingularNetworkError",
    "SynthesisError",
    "TopologyMask",
    "XCouplerError",
    "apply_rotation",
    "denormalize_tz",
    "group_delay",
    "midband_insertion_loss",
    "normalize_signs",
    "normalized_frequency",
    "reconfigure",
    "sparams",
    "synthesize_matrix",
    "synthesize_polynomials",
    "transversal_matrix",
]
