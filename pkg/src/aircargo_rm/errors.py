"""Exception types shared across the package.

The split matters for the CLI and the service: configuration problems
exit with code 1 (HTTP 400, kind "config"), data problems with code 2
(HTTP 400, kind "data").
"""


class EngineError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(EngineError):
    """Bad parameters, missing artifacts, or inconsistent configuration."""

    exit_code = 1


class DataError(EngineError):
    """Input data cannot support the requested operation."""

    exit_code = 2


class IngestError(DataError):
    """The input file cannot be read or parsed at all (fatal, not per-row)."""
