"""Simulation and verification laboratory for positive self-similar Markov processes."""

from .levy_model import (
    ConstantJump,
    CramerMode,
    GaussianJump,
    LevyModel,
    NoJumps,
    SkeletonPath,
    StopRule,
    TwoSidedExponential,
    cramer_root,
    cumulant,
    cumulant_derivative,
    esscher_tilt,
    sample_skeleton,
)
from .lamperti import (
    LampertiClass,
    PssmpPath,
    TimeChange,
    additive_functional,
    classify,
    from_pssmp,
    invert_time,
    to_pssmp,
)
from .streams import StreamFamily

__version__ = "0.1.0"
