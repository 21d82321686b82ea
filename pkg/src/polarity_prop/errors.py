"""Common exception base so the CLI can catch every library error in one place."""


class PolarityPropError(Exception):
    """Base class for all errors raised by this package."""
