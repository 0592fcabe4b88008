"""Dissipative Jaynes-Cummings atom-cavity simulator with two decoherence
control protocols: leakage-elimination pulse control of the non-Markovian
dynamics, and Petz-map reversal of the Markov trajectory."""

from .errors import ConfigError, NumericalInstabilityError, ValidationError
from .model import JCParams
from .pulses import PulseSpec
from .states import DensityState

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DensityState",
    "JCParams",
    "NumericalInstabilityError",
    "PulseSpec",
    "ValidationError",
    "__version__",
]
