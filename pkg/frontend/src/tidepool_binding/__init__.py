"""tidepool-binding: native host-language syntax for the tidepool library.

Wraps tensors so arithmetic operators, in-place updates, matrix products,
comparison, and subscript indexing read naturally, registers numpy's ndarray
as a foreign operand type (zero-copy in both directions where layout and
dtype permit), and re-exports the device/dtype objects, the reusable index
factory, ``ensure``/``cast``, the strict-mode toggle, and the math-mode
parameter.  All semantics live in the primary library; this package adds
syntax only.
"""

import tidepool as _tp
from tidepool import ops as _ops
from tidepool import tensors as _tz

from . import numpy_bridge
from .bound import BoundTensor, IndexHandle, index
from .numpy_bridge import from_numpy, to_numpy

# device and dtype objects
cpu = _tp.cpu
emu = _tp.emu
devices = _tp.list_devices
bool = _tp.bool  # noqa: A001 - dtype objects mirror the wire names
int8 = _tp.int8
uint8 = _tp.uint8
int16 = _tp.int16
uint16 = _tp.uint16
int32 = _tp.int32
uint32 = _tp.uint32
int64 = _tp.int64
uint64 = _tp.uint64
half = _tp.half
float = _tp.float  # noqa: A001
double = _tp.double
complex_half = _tp.complex_half
complex_float = _tp.complex_float
complex_double = _tp.complex_double


def tensor(data_or_dims, dtype=None, device=None) -> BoundTensor:
    """Create a tensor from dims or nested host data, wrapped for syntax."""
    if isinstance(data_or_dims, BoundTensor):
        return BoundTensor(_tp.cast(data_or_dims.raw, dtype, device))
    if isinstance(data_or_dims, _tp.Tensor):
        return BoundTensor(data_or_dims)
    if isinstance(data_or_dims, (list,)) or _is_foreign(data_or_dims):
        op = _ops.as_operand(data_or_dims)
        if isinstance(op, _tp.Scalar):
            return BoundTensor(_tz.scalar_tensor(op, device=device))
        if dtype is not None or device is not None:
            op = _tp.cast(op, dtype, device)
        return BoundTensor(op)
    return BoundTensor(_tp.tensor(tuple(data_or_dims), dtype, device))


def _is_foreign(obj):
    import numpy as np
    return isinstance(obj, (np.ndarray, np.generic))


def zeros(dims, dtype=None, device=None) -> BoundTensor:
    return BoundTensor(_tp.zeros(dims, dtype, device))


def ones(dims, dtype=None, device=None) -> BoundTensor:
    return BoundTensor(_tp.ones(dims, dtype, device))


def arange(n, dtype=None, device=None) -> BoundTensor:
    return BoundTensor(_tp.arange(n, dtype, device))


def identity(n, dtype=None, device=None) -> BoundTensor:
    return BoundTensor(_tp.identity(n, dtype, device))


def ensure(t, dtype=None, device=None, mode="standard"):
    out = _tp.ensure(t.raw if isinstance(t, BoundTensor) else t,
                     dtype, device, mode)
    if isinstance(t, BoundTensor) and out is t.raw:
        return t
    return BoundTensor(out)


def cast(t, dtype=None, device=None, mode="standard") -> BoundTensor:
    return BoundTensor(_tp.cast(t.raw if isinstance(t, BoundTensor) else t,
                                dtype, device, mode))


def set_strict(enabled: bool) -> bool:
    """Disable (True) or re-enable (False) implicit casting; returns prior."""
    return not _tp.set_implicit_casting(not enabled)


def strict_enabled() -> bool:
    return not _tp.implicit_casting()


def _wrap_unary(name):
    primary = getattr(_tp, name)

    def fn(t, mode="standard"):
        return BoundTensor(primary(t.raw if isinstance(t, BoundTensor) else t,
                                   mode=mode))

    fn.__name__ = name
    fn.__doc__ = f"Elementwise {name} with a compute-mode parameter."
    return fn


sqrt = _wrap_unary("square_root")
exp = _wrap_unary("exponential")
log = _wrap_unary("logarithm")
sin = _wrap_unary("sine")
cos = _wrap_unary("cosine")
asin = _wrap_unary("arcsine")
acos = _wrap_unary("arccosine")
conj = _wrap_unary("conjugate")


def inner(u, v) -> _tp.Scalar:
    return _tp.inner(u.raw if isinstance(u, BoundTensor) else u,
                     v.raw if isinstance(v, BoundTensor) else v)


def outer(u, v) -> BoundTensor:
    return BoundTensor(_tp.outer(u.raw if isinstance(u, BoundTensor) else u,
                                 v.raw if isinstance(v, BoundTensor) else v))


def convert_to(t, name, deep=False):
    return _tp.convert_to(t.raw if isinstance(t, BoundTensor) else t,
                          name, deep)


__version__ = "0.1.0"
