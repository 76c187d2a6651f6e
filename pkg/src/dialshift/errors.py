"""Exception types shared across the package.

Validation problems raise SchemaError (bad input files) or ConfigError
(bad parameter combinations). The CLI maps both to exit code 1; usage
mistakes caught by argparse exit with code 2.
"""


class DialshiftError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(DialshiftError):
    """An input file violates the expected record schema."""


class ConfigError(DialshiftError):
    """Parameters are individually valid but inconsistent together."""
