"""Cramer-Rao bounds on estimation, interpolation and prediction of MIMO-OFDM channels."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .asymptotic import amseb, anmseb, k_inverse, k_matrix, k_matrix_finite
from .channel import (
    ChannelRealization,
    NoiseModel,
    PathParameters,
    SystemConfig,
    channel_entry,
    channel_matrix,
    observe,
    steering_vector,
    validate_config,
)
from .errors import (
    AliasingViolation,
    AllTrialsDiscarded,
    NegativeHorizon,
    NonRectangularGrid,
    OutOfBand,
    SingularFim,
    StructuralError,
)
from .exact import fim_block_diagonal, fim_exact, invert_fim, mseb_point, mseb_points, nmse, rnmse
from .montecarlo import BoundSurface, DelayProfile, EnsembleSpec, average_bound, draw_realization

__all__ = [
    "BACKEND",
    "AliasingViolation",
    "AllTrialsDiscarded",
    "BoundSurface",
    "ChannelRealization",
    "DelayProfile",
    "EnsembleSpec",
    "NegativeHorizon",
    "NoiseModel",
    "NonRectangularGrid",
    "OutOfBand",
    "PathParameters",
    "SingularFim",
    "StructuralError",
    "SystemConfig",
    "amseb",
    "anmseb",
    "average_bound",
    "channel_entry",
    "channel_matrix",
    "draw_realization",
    "fim_block_diagonal",
    "fim_exact",
    "invert_fim",
    "k_inverse",
    "k_matrix",
    "k_matrix_finite",
    "mseb_point",
    "mseb_points",
    "nmse",
    "observe",
    "rnmse",
    "steering_vector",
    "validate_config",
]
