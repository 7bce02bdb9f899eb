"""Exception hierarchy shared across the package."""


class ColanetError(Exception):
    """Base class for all errors raised by this package."""


class DataFormatError(ColanetError):
    """Malformed dataset file (flat binary, label text, or IDX)."""


class ConfigError(ColanetError):
    """Invalid network configuration: parse failure or failed validation."""


class SimulationError(ColanetError):
    """Runtime error inside the simulation engine."""
