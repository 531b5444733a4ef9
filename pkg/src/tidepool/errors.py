"""Exception hierarchy for the tidepool library.

Every failure raised by the library derives from :class:`TidepoolError` so
callers can catch library errors without catching programming mistakes.
"""


class TidepoolError(Exception):
    """Base class for all tidepool errors."""


class DeviceError(TidepoolError):
    """Unknown device, unsupported device feature, or device misuse."""


class AllocationError(TidepoolError):
    """Device memory (arena) exhausted or allocation otherwise failed."""


class StorageError(TidepoolError):
    """Invalid storage construction or storage misuse."""


class ShapeError(TidepoolError):
    """Dimension mismatch, bad extents, or too many dimensions."""


class ReadOnlyError(TidepoolError):
    """Attempt to mutate read-only or self-overlapping data."""


class CastError(TidepoolError):
    """A value or tensor cannot be converted as requested."""


class StrictModeError(CastError):
    """Implicit casting is disabled and an implicit conversion was needed."""


class DomainError(TidepoolError):
    """Input outside an operation's mathematical domain (error mode)."""


class IndexingError(TidepoolError):
    """Malformed index expression, out-of-range index, or binding misuse."""


class DispatchError(TidepoolError):
    """Function-table lookup or module-registry failure.

    ``code`` distinguishes the failure class programmatically.
    """

    code = "dispatch"


class ImplNotLoadedError(DispatchError):
    """The module has no implementation table for the device type."""

    code = "impl-not-loaded"


class OpNotProvidedError(DispatchError):
    """The implementation table exists but does not provide the operation."""

    code = "op-not-provided"


class ModuleRegistryError(DispatchError):
    """Duplicate registration, missing dependency, or finalization misuse."""

    code = "module-registry"


class FormatError(TidepoolError):
    """Malformed OTP1 data: bad magic, bad header fields, or truncation."""


class InteropError(TidepoolError):
    """External-type registry misuse or unsupported conversion."""
