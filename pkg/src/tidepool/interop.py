"""External tensor-type plug-ins and the OTP1 serialization format.

Plug-ins register a named foreign type with import/export functions; once
registered, foreign objects are accepted anywhere a tensor operand is, and
``convert_to(t, name)`` exports through the same registration.

OTP1 is the bit-exact on-disk format (extension ``.otp``)::

    magic      4 bytes  4F 54 50 01          ("OTP" + version 1)
    dtype      1 byte   wire codes 0-14
    byteorder  1 byte   0 little, 1 big
    ndim       1 byte   0-8
    reserved   1 byte   must be 0
    dims       ndim x u64 little-endian extents
    payload    elements, contiguous column-major, in the declared byte order
"""

from __future__ import annotations

import io
import math
import struct

from . import devices, dtypes, ops
from . import tensors as tz
from .errors import FormatError, InteropError
from .tensors import Tensor

MAGIC = b"OTP\x01"
_HEADER = struct.Struct("<4sBBBB")


class ExternalTypeRegistration:
    __slots__ = ("name", "foreign_type", "import_fn", "export_fn",
                 "shallow_capable")

    def __init__(self, name: str, foreign_type: type, import_fn, export_fn,
                 shallow_capable: bool = False):
        self.name = name
        self.foreign_type = foreign_type
        self.import_fn = import_fn
        self.export_fn = export_fn
        self.shallow_capable = shallow_capable


_registry: dict[str, ExternalTypeRegistration] = {}


def register_external(reg: ExternalTypeRegistration) -> None:
    if reg.name in _registry:
        raise InteropError(f"external type {reg.name!r} already registered")
    _registry[reg.name] = reg


def registered_names() -> list[str]:
    return sorted(_registry)


def convert_to(t: Tensor, name: str, deep: bool = False):
    """Export a tensor through a registered external type.

    The shallow path (default) needs the registration's support and
    host-memory storage; request ``deep=True`` to force a staged copy.
    """
    reg = _registry.get(name)
    if reg is None:
        raise InteropError(f"no external type registered under {name!r}")
    if not deep:
        if not reg.shallow_capable:
            raise InteropError(
                f"external type {name!r} does not support shallow export")
        if not t.device.is_host:
            raise InteropError(
                f"shallow export needs host memory; tensor is on {t.device.name}")
        return reg.export_fn(t)
    staged = t if t.device.is_host else ops.cast(t, device=devices.cpu())
    return reg.export_fn(staged)


def _resolve_foreign(obj):
    for reg in _registry.values():
        if isinstance(obj, reg.foreign_type):
            return reg.import_fn(obj)
    return None


ops.register_operand_resolver(_resolve_foreign)


# ---------------------------------------------------------------------------
# OTP1
# ---------------------------------------------------------------------------

def save_otp1(t: Tensor, sink) -> None:
    """Write the tensor to a path or binary file object.

    Layout is normalized to contiguous column-major; dtype and byte order
    are preserved bit-exactly.
    """
    if isinstance(sink, (str, bytes)):
        with open(sink, "wb") as fh:
            save_otp1(t, fh)
        return
    staged = t
    if not staged.device.is_host:
        staged = tz.tensor_create(t.dims, t.dtype, devices.cpu())
        staged.byteorder = t.byteorder
        tz._raw_gather(t, staged)  # byte-exact stage through host memory
    header = _HEADER.pack(MAGIC, t.dtype.wire_code,
                          0 if t.byteorder == "little" else 1, t.ndim, 0)
    sink.write(header)
    for d in t.dims:
        sink.write(struct.pack("<Q", d))
    staged.storage.stream.sync()
    buf = staged.storage.view()
    size = staged.dtype.size
    out = bytearray()
    for off in tz.iter_offsets(staged):
        out += buf[off:off + size]
    sink.write(bytes(out))


def save_otp1_bytes(t: Tensor) -> bytes:
    sink = io.BytesIO()
    save_otp1(t, sink)
    return sink.getvalue()


def load_otp1(source) -> Tensor:
    """Read an OTP1 stream into a contiguous column-major cpu tensor."""
    if isinstance(source, (str,)):
        with open(source, "rb") as fh:
            return load_otp1(fh)
    if isinstance(source, (bytes, bytearray)):
        return load_otp1(io.BytesIO(bytes(source)))
    head = source.read(_HEADER.size)
    if len(head) < _HEADER.size:
        raise FormatError("truncated OTP1 header")
    magic, dtype_code, order_code, ndim, reserved = _HEADER.unpack(head)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic.hex()} (expected {MAGIC.hex()})")
    if reserved != 0:
        raise FormatError(f"reserved header byte is {reserved}, must be 0")
    if ndim > tz.MAX_DIMS:
        raise FormatError(f"{ndim} dimensions exceed the limit of {tz.MAX_DIMS}")
    if order_code not in (0, 1):
        raise FormatError(f"bad byte-order code {order_code}")
    try:
        dtype = dtypes.by_wire_code(dtype_code)
    except Exception:
        raise FormatError(f"bad dtype code {dtype_code}") from None
    dims = []
    for _ in range(ndim):
        raw = source.read(8)
        if len(raw) < 8:
            raise FormatError("truncated OTP1 dimension list")
        dims.append(struct.unpack("<Q", raw)[0])
    dims = tuple(dims)
    expect = math.prod(dims) * dtype.size
    payload = source.read(expect)
    if len(payload) < expect:
        raise FormatError(
            f"truncated OTP1 payload: {len(payload)} of {expect} bytes")
    t = tz.tensor_create(dims, dtype, devices.cpu())
    t.byteorder = "little" if order_code == 0 else "big"
    t.storage.view()[:expect] = payload
    return t


# ---------------------------------------------------------------------------
# Built-in reference plug-in: OTP1 blobs
# ---------------------------------------------------------------------------

class Otp1Blob(bytes):
    """Serialized tensor as a distinct bytes subtype, so plain bytes keep
    their usual meaning in user code."""


register_external(ExternalTypeRegistration(
    name="otp1-blob",
    foreign_type=Otp1Blob,
    import_fn=lambda blob: load_otp1(bytes(blob)),
    export_fn=lambda t: Otp1Blob(save_otp1_bytes(t)),
    shallow_capable=True,
))
