"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: config/schema problems exit 1,
I/O and integrity problems exit 2.
"""


class OvdkitError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(OvdkitError):
    """Invalid run configuration (bad variant, bad parameter, inconsistent providers)."""


class SchemaError(OvdkitError):
    """Malformed document or mutually inconsistent shapes/ids."""


class SplitError(SchemaError):
    """Base/novel category split is invalid (overlap, unknown category)."""


class IntegrityError(OvdkitError):
    """Stored checksum does not match file contents."""


class DegenerateBoxError(OvdkitError):
    """A region collapsed to zero width or height; callers drop or fall back."""
