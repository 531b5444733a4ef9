"""Zero-copy bridge between tidepool tensors and numpy arrays.

Importing this module registers the ``"numpy"`` external type: ndarray
operands are accepted anywhere a tensor is, and ``convert_to(t, "numpy")``
exports a shallow view when layout and dtype permit.  Byte-order flags
translate in both directions.  complex-half has no numpy equivalent and is
rejected by name.
"""

from __future__ import annotations

import sys

import numpy as np

import tidepool as tp
from tidepool import dtypes as _dt
from tidepool import ops as _ops
from tidepool import storage as _storage
from tidepool import tensors as _tz
from tidepool.errors import InteropError

_TO_NUMPY = {
    "bool": np.bool_, "int8": np.int8, "uint8": np.uint8,
    "int16": np.int16, "uint16": np.uint16, "int32": np.int32,
    "uint32": np.uint32, "int64": np.int64, "uint64": np.uint64,
    "half": np.float16, "float": np.float32, "double": np.float64,
    "complex-float": np.complex64, "complex-double": np.complex128,
}

_FROM_NUMPY = {np.dtype(v): _dt.by_name(k) for k, v in _TO_NUMPY.items()}


def _np_byteorder(dtype: np.dtype) -> str:
    code = dtype.byteorder
    if code == "=" or code == "|":
        return sys.byteorder
    return "little" if code == "<" else "big"


def _owning_array(arr: np.ndarray) -> np.ndarray:
    owner = arr
    while isinstance(owner.base, np.ndarray):
        owner = owner.base
    return owner


def from_numpy(arr: np.ndarray, copy: bool = False) -> tp.Tensor:
    """Wrap (or copy) a numpy array as a tensor on the cpu device.

    The shallow path requires the owning allocation to be reachable as a
    contiguous buffer; otherwise the data is copied.
    """
    if not isinstance(arr, np.ndarray):
        raise InteropError("from_numpy expects a numpy ndarray")
    base_dtype = arr.dtype.newbyteorder("=")
    tde = _FROM_NUMPY.get(np.dtype(base_dtype))
    if tde is None:
        raise InteropError(
            f"numpy dtype {arr.dtype.name!r} has no tidepool equivalent")
    byteorder = _np_byteorder(arr.dtype)

    owner = _owning_array(arr)
    shallow = not copy and (owner.flags.c_contiguous or
                            owner.flags.f_contiguous)
    if shallow:
        flat = owner.reshape(-1, order="A").view(np.uint8)
        storage = _storage.storage_from_external(memoryview(flat))
        offset = (arr.__array_interface__["data"][0]
                  - owner.__array_interface__["data"][0])
        # numpy dims are outermost-first; tensor dims index the same way,
        # so dims and byte strides carry over directly
        t = tp.Tensor(storage, offset, arr.shape, arr.strides, tde, byteorder)
        if not arr.flags.writeable:
            storage.readonly = True
        return t

    t = tp.tensor_create(arr.shape, tde, tp.cpu())
    t.byteorder = byteorder
    # Fortran-order raw bytes line up with the column-major element layout
    t.storage.view()[:] = arr.tobytes(order="F")
    return t


def to_numpy(t, copy: bool = False) -> np.ndarray:
    """Export a tensor as a numpy array, sharing memory when possible."""
    if isinstance(t, tp.Scalar):
        return np.asarray(t.value)
    if hasattr(t, "raw"):
        t = t.raw
    np_base = _TO_NUMPY.get(t.dtype.name)
    if np_base is None:
        raise InteropError(
            f"dtype {t.dtype.name!r} has no numpy equivalent")
    np_dtype = np.dtype(np_base).newbyteorder(
        "<" if t.byteorder == "little" else ">")
    if not t.device.is_host or copy:
        staged = t if t.device.is_host else tp.cast(t, device=tp.cpu())
        # tensor logical order is first-axis-fastest, i.e. Fortran ravel order
        out = np.empty(t.dims, dtype=np_dtype, order="F")
        out.ravel(order="F")[:] = _tz.read_values(staged)
        return out
    t.storage.stream.sync()
    base = np.frombuffer(t.storage.view(), dtype=np.uint8)
    start = base[t.offset:]
    usable = (len(start) // t.dtype.size) * t.dtype.size
    anchor = start[:usable].view(np_dtype) if usable else \
        np.empty(0, dtype=np_dtype)
    out = np.lib.stride_tricks.as_strided(anchor, shape=t.dims,
                                          strides=t.strides)
    if t.storage.readonly:
        out = out.view()
        out.flags.writeable = False
    return out


def _import_operand(arr):
    return from_numpy(arr)


def _scalar_resolver(obj):
    if isinstance(obj, np.generic):
        value = obj.item()
        if isinstance(value, (bool, int, float, complex)):
            return tp.Scalar(value)
    return None


tp.register_external(tp.ExternalTypeRegistration(
    name="numpy",
    foreign_type=np.ndarray,
    import_fn=_import_operand,
    export_fn=to_numpy,
    shallow_capable=True,
))
_ops.register_operand_resolver(_scalar_resolver)
