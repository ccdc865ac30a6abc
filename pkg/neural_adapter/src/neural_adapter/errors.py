class AdapterError(Exception):
    """Base class for everything this package raises on purpose."""


class ContractError(AdapterError):
    """An exchanged file does not match its documented schema."""


class ConfigError(AdapterError):
    """A training configuration value is out of range or unknown."""
