"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """A caller passed arguments that violate an operation's preconditions."""


class DataFormatError(ValueError):
    """An input file is malformed (bad magic number, truncated payload, ...)."""


class ConfigError(ValueError):
    """An experiment configuration is missing keys or holds bad values."""


class NumericError(ArithmeticError):
    """A NaN or infinity appeared where only finite values are allowed."""
