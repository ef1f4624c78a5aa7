"""afcsim: adaptive feedforward cancellation of periodic runout.

A discrete-time servo-loop simulator in which one or more actuator stages
jointly estimate their plant dynamics and the residual periodic error on
a known harmonic regressor, then adapt a feedforward signal that cancels
the periodic content down to the broadband noise floor.
"""

__version__ = "0.1.0"

from .analysis import HarmonicSpectrum, attenuation_report, harmonic_spectrum
from .disturbance import NrroModel, RroProfile, random_profile
from .estimator import GainSchedule, ParameterVector
from .feedforward import (
    FeedforwardState,
    ResponseBlocks,
    ResponseSmoother,
    build_response_blocks,
)
from .lti_core import DelayPolynomial, FrequencyPoint, RationalSystem
from .regressors import HarmonicSet, TappedDelayLine, rro_regressor
from .servo_sim import (
    ConfigError,
    LoopConfig,
    SimulationDivergence,
    SimulationTrace,
    StageConfig,
    run_episode,
    validate,
)

__all__ = [
    "__version__",
    "HarmonicSpectrum",
    "attenuation_report",
    "harmonic_spectrum",
    "NrroModel",
    "RroProfile",
    "random_profile",
    "GainSchedule",
    "ParameterVector",
    "FeedforwardState",
    "ResponseBlocks",
    "ResponseSmoother",
    "build_response_blocks",
    "DelayPolynomial",
    "FrequencyPoint",
    "RationalSystem",
    "HarmonicSet",
    "TappedDelayLine",
    "rro_regressor",
    "ConfigError",
    "LoopConfig",
    "SimulationDivergence",
    "SimulationTrace",
    "StageConfig",
    "run_episode",
    "validate",
]
