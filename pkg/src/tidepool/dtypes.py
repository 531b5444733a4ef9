"""Element types, the implicit-promotion lattice, and scalar conversion.

The library supports 15 element types: booleans, signed and unsigned 8/16/
32/64-bit integers, and real and complex half/single/double-precision
floats.  Implicit promotion picks the smallest type whose value set contains
the value sets of both operands; when no such type exists (only possible
when a 64-bit integer meets a float, an opposite-signedness integer it
cannot absorb, or the other 64-bit integer) the result falls back to
``double`` (``complex-double`` if either side is complex), since no
quad-precision or 128-bit integer type is provided.

Half-precision values are stored as IEEE 754 binary16 but all arithmetic
widens to binary32; see :func:`widen_for_compute`.
"""

from __future__ import annotations

import math
import struct
import sys
from typing import Callable

from .errors import CastError, DomainError

MODES = ("standard", "warning", "error", "complex")


def check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ValueError(f"unknown compute mode {mode!r}; expected one of {MODES}")
    return mode


class DType:
    """Immutable element-type descriptor.

    ``wire_code`` is the byte used for this type in OTP1 headers and keys the
    canonical ordering of the 15 types.
    """

    __slots__ = ("name", "wire_code", "size", "is_signed", "is_float",
                 "is_complex", "_rank")

    def __init__(self, name: str, wire_code: int, size: int, *,
                 signed: bool, floating: bool, cmplx: bool, rank: int):
        self.name = name
        self.wire_code = wire_code
        self.size = size
        self.is_signed = signed
        self.is_float = floating
        self.is_complex = cmplx
        self._rank = rank

    @property
    def is_integer(self) -> bool:
        return not self.is_float and self.name != "bool"

    @property
    def component_size(self) -> int:
        """Size of one real component (= size, or size/2 for complex)."""
        return self.size // 2 if self.is_complex else self.size

    def __repr__(self):
        return self.name


# rank orders types of equal size when choosing the smallest container:
# bool < signed int < unsigned int < real float < complex.
BOOL = DType("bool", 0, 1, signed=False, floating=False, cmplx=False, rank=0)
INT8 = DType("int8", 1, 1, signed=True, floating=False, cmplx=False, rank=1)
UINT8 = DType("uint8", 2, 1, signed=False, floating=False, cmplx=False, rank=2)
INT16 = DType("int16", 3, 2, signed=True, floating=False, cmplx=False, rank=1)
UINT16 = DType("uint16", 4, 2, signed=False, floating=False, cmplx=False, rank=2)
INT32 = DType("int32", 5, 4, signed=True, floating=False, cmplx=False, rank=1)
UINT32 = DType("uint32", 6, 4, signed=False, floating=False, cmplx=False, rank=2)
INT64 = DType("int64", 7, 8, signed=True, floating=False, cmplx=False, rank=1)
UINT64 = DType("uint64", 8, 8, signed=False, floating=False, cmplx=False, rank=2)
HALF = DType("half", 9, 2, signed=True, floating=True, cmplx=False, rank=3)
FLOAT = DType("float", 10, 4, signed=True, floating=True, cmplx=False, rank=3)
DOUBLE = DType("double", 11, 8, signed=True, floating=True, cmplx=False, rank=3)
CHALF = DType("complex-half", 12, 4, signed=True, floating=True, cmplx=True, rank=4)
CFLOAT = DType("complex-float", 13, 8, signed=True, floating=True, cmplx=True, rank=4)
CDOUBLE = DType("complex-double", 14, 16, signed=True, floating=True, cmplx=True, rank=4)

ALL_DTYPES = (BOOL, INT8, UINT8, INT16, UINT16, INT32, UINT32, INT64, UINT64,
              HALF, FLOAT, DOUBLE, CHALF, CFLOAT, CDOUBLE)

_BY_NAME = {d.name: d for d in ALL_DTYPES}
_BY_WIRE = {d.wire_code: d for d in ALL_DTYPES}

_REAL_OF = {CHALF: HALF, CFLOAT: FLOAT, CDOUBLE: DOUBLE}
_COMPLEX_OF = {HALF: CHALF, FLOAT: CFLOAT, DOUBLE: CDOUBLE,
               CHALF: CHALF, CFLOAT: CFLOAT, CDOUBLE: CDOUBLE}

# significand bits of the real float types; integers up to 2**p round-trip.
_FLOAT_SIG_BITS = {HALF: 11, FLOAT: 24, DOUBLE: 53}


def by_name(name: str) -> DType:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise CastError(f"unknown dtype name {name!r}") from None


def by_wire_code(code: int) -> DType:
    try:
        return _BY_WIRE[code]
    except KeyError:
        raise CastError(f"unknown dtype wire code {code}") from None


def real_counterpart(d: DType) -> DType:
    return _REAL_OF.get(d, d)


def complex_counterpart(d: DType) -> DType:
    """Smallest complex type containing ``d``; integers go through double."""
    if d in _COMPLEX_OF:
        return _COMPLEX_OF[d]
    return _COMPLEX_OF[float_container(d)]


def int_range(d: DType) -> tuple[int, int]:
    bits = 8 * d.size
    if d.is_signed:
        return -(1 << (bits - 1)), (1 << (bits - 1)) - 1
    return 0, (1 << bits) - 1


def float_container(d: DType) -> DType:
    """Smallest real float type whose value set contains integer type ``d``."""
    if d.is_float:
        return real_counterpart(d)
    lo, hi = int_range(d) if d.is_integer else (0, 1)
    for f in (HALF, FLOAT, DOUBLE):
        p = 1 << _FLOAT_SIG_BITS[f]
        if hi <= p and -lo <= p:
            return f
    return DOUBLE


def contains(c: DType, a: DType) -> bool:
    """True when every value of dtype ``a`` is exactly representable in ``c``."""
    if c is a:
        return True
    if a.is_complex:
        return c.is_complex and contains(_REAL_OF[c], _REAL_OF[a])
    if c.is_complex:
        return contains(_REAL_OF[c], a)
    if a is BOOL:
        return True
    if a.is_integer:
        lo_a, hi_a = int_range(a)
        if c.is_integer:
            lo_c, hi_c = int_range(c)
            return lo_c <= lo_a and hi_a <= hi_c
        if c.is_float:
            p = 1 << _FLOAT_SIG_BITS[c]
            return hi_a <= p and -lo_a <= p
        return False
    # a is a real float: only a wider (or equal) real float contains it.
    if c.is_float and not c.is_complex:
        return _FLOAT_SIG_BITS[c] >= _FLOAT_SIG_BITS[a] and c.size >= a.size
    return False


_PROMOTION_ORDER = sorted(ALL_DTYPES, key=lambda d: (d.size, d._rank, d.wire_code))


def _promote_pair(a: DType, b: DType) -> DType:
    for c in _PROMOTION_ORDER:
        if contains(c, a) and contains(c, b):
            return c
    # Unresolvable pairs always involve a 64-bit integer; double is the
    # documented lossy fallback (complex-double when a complex side exists).
    if a.is_complex or b.is_complex:
        return CDOUBLE
    return DOUBLE


_PROMOTE_TABLE = {(a, b): _promote_pair(a, b) for a in ALL_DTYPES for b in ALL_DTYPES}


def promote(a: DType, b: DType) -> DType:
    """Implicit promotion of a dtype pair: total, commutative, idempotent."""
    return _PROMOTE_TABLE[(a, b)]


def widen_for_compute(d: DType) -> DType:
    """Compute type for kernels: half-precision widens, the rest is fixed."""
    if d is HALF:
        return FLOAT
    if d is CHALF:
        return CFLOAT
    return d


# ---------------------------------------------------------------------------
# Global cast policy and warning delivery
# ---------------------------------------------------------------------------

_implicit_casting = True


def set_implicit_casting(enabled: bool) -> bool:
    """Toggle implicit type/device casting; returns the previous setting."""
    global _implicit_casting
    previous = _implicit_casting
    _implicit_casting = bool(enabled)
    return previous


def implicit_casting() -> bool:
    return _implicit_casting


def _default_warning_handler(message: str) -> None:
    print(f"tidepool warning: {message}", file=sys.stderr)


_warning_handler: Callable[[str], None] = _default_warning_handler


def set_warning_handler(handler: Callable[[str], None] | None):
    """Install a warning-mode diagnostic callback; None restores the default."""
    global _warning_handler
    previous = _warning_handler
    _warning_handler = handler if handler is not None else _default_warning_handler
    return previous


def emit_warning(message: str) -> None:
    _warning_handler(message)


class CastContext:
    """Aggregates per-call cast diagnostics so warning mode fires once."""

    __slots__ = ("mode", "messages")

    def __init__(self, mode: str = "standard"):
        self.mode = check_mode(mode)
        self.messages: list[str] = []

    def domain_loss(self, message: str) -> None:
        if self.mode == "error":
            raise DomainError(message)
        if self.mode == "warning" and not self.messages:
            self.messages.append(message)

    def flush(self) -> None:
        if self.messages:
            emit_warning(self.messages[0])
            self.messages.clear()


# ---------------------------------------------------------------------------
# Scalar conversion
# ---------------------------------------------------------------------------

def _wrap_int(v: int, d: DType) -> int:
    bits = 8 * d.size
    v &= (1 << bits) - 1
    if d.is_signed and v >= (1 << (bits - 1)):
        v -= 1 << bits
    return v


def _narrow_float(v: float, d: DType) -> float:
    """Round a Python float to binary16/binary32; overflow goes to ±inf."""
    if d is DOUBLE:
        return float(v)
    fmt = "<e" if d is HALF else "<f"
    try:
        return struct.unpack(fmt, struct.pack(fmt, v))[0]
    except OverflowError:
        return math.inf if v > 0 else -math.inf


def cast_scalar(value, to: DType, mode: str = "standard",
                ctx: CastContext | None = None):
    """Convert one scalar value to dtype ``to`` under the given compute mode.

    Integer narrowing wraps modulo 2**n in standard mode; warning mode emits
    one diagnostic per call; error mode raises.  A complex value converts to
    a real type silently only when its imaginary part is exactly zero.
    """
    if ctx is None:
        ctx = CastContext(mode)
        result = cast_scalar(value, to, mode, ctx)
        ctx.flush()
        return result

    if isinstance(value, complex):
        if to.is_complex:
            comp = real_counterpart(to)
            return complex(_narrow_float(value.real, comp),
                           _narrow_float(value.imag, comp))
        if value.imag != 0.0:
            ctx.domain_loss(f"discarding nonzero imaginary part {value.imag!r}")
        value = value.real

    if to is BOOL:
        return value != 0

    if to.is_complex:
        comp = real_counterpart(to)
        return complex(_narrow_float(float(value), comp), 0.0)

    if to.is_float:
        return _narrow_float(float(value), to)

    # integer target
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            ctx.domain_loss(f"cannot represent {value!r} as {to.name}")
            return 0
        value = math.trunc(value)  # round toward zero
    lo, hi = int_range(to)
    if not lo <= value <= hi:
        ctx.domain_loss(f"value {value} out of range for {to.name}")
    return _wrap_int(int(value), to)


def lossless_castable(a: DType, c: DType) -> bool:
    """True when a cast from ``a`` to ``c`` can never lose information."""
    return contains(c, a)


def infer_scalar_dtype(value) -> DType:
    """Dtype of a host scalar: bool, int64, double, or complex-double."""
    if isinstance(value, bool):
        return BOOL
    if isinstance(value, int):
        return INT64
    if isinstance(value, float):
        return DOUBLE
    if isinstance(value, complex):
        return CDOUBLE
    raise CastError(f"not a scalar value: {value!r}")


# ---------------------------------------------------------------------------
# Element codecs: pack/unpack of single elements at a byte offset
# ---------------------------------------------------------------------------

_FMT = {BOOL: "?", INT8: "b", UINT8: "B", INT16: "h", UINT16: "H",
        INT32: "i", UINT32: "I", INT64: "q", UINT64: "Q",
        HALF: "e", FLOAT: "f", DOUBLE: "d"}

_CODEC_CACHE: dict[tuple[DType, str], tuple] = {}


def codec(d: DType, byteorder: str):
    """Return ``(unpack(buf, off), pack(buf, off, value))`` for the dtype.

    ``value`` passed to pack must already lie in the dtype's domain (use
    :func:`cast_scalar` first); pack performs no range checking of its own
    beyond what ``struct`` enforces.
    """
    key = (d, byteorder)
    cached = _CODEC_CACHE.get(key)
    if cached is not None:
        return cached
    prefix = "<" if byteorder == "little" else ">"
    if d.is_complex:
        comp = struct.Struct(prefix + _FMT[real_counterpart(d)] * 2)
        unpack_from, pack_into = comp.unpack_from, comp.pack_into

        def unpack(buf, off):
            re, im = unpack_from(buf, off)
            return complex(re, im)

        def pack(buf, off, value):
            pack_into(buf, off, value.real, value.imag)
    else:
        s = struct.Struct(prefix + _FMT[d])
        unpack_from, pack_into = s.unpack_from, s.pack_into

        def unpack(buf, off):
            return unpack_from(buf, off)[0]

        def pack(buf, off, value):
            pack_into(buf, off, value)

    pair = (unpack, pack)
    _CODEC_CACHE[key] = pair
    return pair


NATIVE_ORDER = sys.byteorder  # "little" on every supported platform


def swap_element(buf, off: int, d: DType) -> None:
    """Reverse the byte order of one element in place (per complex component)."""
    n = d.component_size
    for start in range(off, off + d.size, n):
        buf[start:start + n] = bytes(reversed(buf[start:start + n]))
