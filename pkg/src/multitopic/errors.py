"""Exception classes shared across the toolkit.

The CLI maps these onto its exit-code contract: configuration problems
exit with 2, data problems with 3, anything else with 1.
"""


class ConfigError(ValueError):
    """A configuration value or combination of values is invalid."""


class DataError(ValueError):
    """An input file or data structure violates its documented format."""
