"""Heat counting statistics for the spin-boson model via the reaction coordinate mapping."""

__version__ = "0.1.0"

from heatcount.model import ModelParams, RCParams, map_to_rc
from heatcount.engine import CountingVariant, HeatCountingModel

__all__ = [
    "ModelParams",
    "RCParams",
    "map_to_rc",
    "CountingVariant",
    "HeatCountingModel",
    "__version__",
]
