"""Exception types shared across the package.

The CLI (and the HTTP error payloads) map error families to exit codes:
schema/config problems exit 2, training divergence 3, prediction/target
misalignment 4, anything else 1.
"""

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_SCHEMA = 2
EXIT_DIVERGENCE = 3
EXIT_ALIGNMENT = 4


class VideoQAError(Exception):
    """Base class for all package-level errors."""

    exit_code = EXIT_FAILURE


class SchemaError(VideoQAError):
    """Malformed manifest, CSV, or checkpoint data."""

    exit_code = EXIT_SCHEMA


class ConfigError(VideoQAError):
    """Invalid or inconsistent configuration values."""

    exit_code = EXIT_SCHEMA


class FilenameParseError(SchemaError):
    """Video filename does not follow the ``<id>_<domain>`` convention."""


class DomainRangeError(SchemaError):
    """Domain label outside the supported class range."""


class DuplicateVideoIdError(SchemaError):
    """Two manifest rows resolved to the same video id."""


class DivergenceError(VideoQAError):
    """Training produced a non-finite loss."""

    exit_code = EXIT_DIVERGENCE


class AlignmentError(VideoQAError):
    """Two files that must cover the same videos do not."""

    exit_code = EXIT_ALIGNMENT


class DegenerateBatchError(VideoQAError):
    """A loss was asked to score a batch it is undefined on (constant targets)."""


class DegenerateEmbeddingError(VideoQAError):
    """A text embedding came back with zero norm."""


class UndefinedCorrelationError(VideoQAError):
    """Correlation requested on constant (or too-short) input."""


class FitError(VideoQAError):
    """Ensemble weight fitting failed; message carries the rank diagnostic."""
