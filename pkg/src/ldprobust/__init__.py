"""Local differential privacy and adversarial robustness in simulated federated learning."""

from .errors import ConfigError, DataFormatError, InvalidArgument, NumericError
from .mechanisms import ClipSpec, PrivacyBudget

__version__ = "0.1.0"
