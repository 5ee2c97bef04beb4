"""Static retrieval and approximate-membership structures over ribbon systems."""

from .bumped import (
    BumpedRibbon,
    BumpingLayer,
    BurrConfig,
    ThresholdMode,
    construct_burr,
    default_bucket_size,
    default_params,
)
from .core import BandedSystem, InsertResult, Outcome, ScrambledFill, back_substitute, zero_fill
from .errors import (
    ConstructionFailed,
    InconsistentDuplicates,
    RibbonError,
    TruncatedFile,
    VersionMismatch,
)
from .homogeneous import HomogeneousFilter, construct_homogeneous
from .serialize import load_structure, save_structure
from .standard import StandardRibbon, construct_standard
from .storage import ContiguousSolution, InterleavedSolution

__all__ = [
    "BandedSystem",
    "BumpedRibbon",
    "BumpingLayer",
    "BurrConfig",
    "ConstructionFailed",
    "ContiguousSolution",
    "HomogeneousFilter",
    "InconsistentDuplicates",
    "InsertResult",
    "InterleavedSolution",
    "Outcome",
    "RibbonError",
    "ScrambledFill",
    "StandardRibbon",
    "ThresholdMode",
    "TruncatedFile",
    "VersionMismatch",
    "back_substitute",
    "construct_burr",
    "construct_homogeneous",
    "construct_standard",
    "default_bucket_size",
    "default_params",
    "load_structure",
    "save_structure",
    "zero_fill",
]

__version__ = "0.1.0"
