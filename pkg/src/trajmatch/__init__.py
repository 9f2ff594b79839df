"""trajmatch: behavioral similarity of population-based optimizers.

Compares search trajectories of optimization algorithms by applying the
crossmatch two-sample test to iteration-aligned populations, aggregates
the outcomes into a similarity matrix, and clusters algorithms into a
dendrogram.
"""

__version__ = "0.1.0"

from .crossmatch import (
    CrossmatchResult,
    LabeledSample,
    NullDistribution,
    crossmatch_statistic,
    crossmatch_test,
    null_pmf,
)
from .errors import InputError
from .matching import (
    DistanceMatrix,
    Matching,
    brute_force_matching,
    build_distance_matrix,
    min_weight_perfect_matching,
)

__all__ = [
    "__version__",
    "InputError",
    "DistanceMatrix",
    "Matching",
    "build_distance_matrix",
    "min_weight_perfect_matching",
    "brute_force_matching",
    "LabeledSample",
    "CrossmatchResult",
    "NullDistribution",
    "crossmatch_statistic",
    "crossmatch_test",
    "null_pmf",
]
