"""BoundTensor: native operator and subscript syntax over tidepool tensors.

The wrapper adds syntax only; every operation delegates to the primary
library, so device resolution (left operand wins), promotion, strict mode,
and compute modes behave exactly as they do through the functional API.
"""

from __future__ import annotations

import tidepool as tp
from tidepool import indexing as _ix
from tidepool import ops as _ops
from tidepool import tensors as _tz


def _unwrap(obj):
    if isinstance(obj, BoundTensor):
        return obj.raw
    return obj


def _coerce_part(k):
    """Map one subscript entry onto something the index algebra accepts."""
    if isinstance(k, BoundTensor):
        return k.raw
    if isinstance(k, IndexHandle):
        return k.inner
    if k is Ellipsis or isinstance(k, (int, slice, tp.Tensor, tp.Scalar,
                                       _ix.IndexExpr, _ix.BoundIndex,
                                       list, tuple)):
        return k
    # anything else (e.g. a registered host array type) imports as a tensor
    try:
        return _ops.as_operand(k)
    except tp.TidepoolError:
        return k


def _subscript_parts(key):
    if not isinstance(key, tuple):
        key = (key,)
    return tuple(_coerce_part(k) for k in key)


class BoundTensor:
    """Thin handle over a primary tensor with operator/index syntax."""

    __slots__ = ("raw",)
    __array_ufunc__ = None  # keep numpy from hijacking mixed expressions

    def __init__(self, raw):
        if isinstance(raw, BoundTensor):
            raw = raw.raw
        if not isinstance(raw, tp.Tensor):
            raw = _ops.as_operand(raw)
            if isinstance(raw, tp.Scalar):
                raw = _tz.scalar_tensor(raw)
        self.raw = raw

    # -- attributes ------------------------------------------------------

    @property
    def dims(self):
        return self.raw.dims

    @property
    def ndim(self):
        return self.raw.ndim

    @property
    def dtype(self):
        return self.raw.dtype

    @property
    def device(self):
        return self.raw.device

    @property
    def byteorder(self):
        return self.raw.byteorder

    @property
    def T(self):
        return BoundTensor(tp.transpose(self.raw))

    @property
    def real(self):
        return BoundTensor(tp.real_view(self.raw))

    @property
    def imag(self):
        return BoundTensor(tp.imag_view(self.raw))

    def item(self):
        return self.raw.item()

    def tolist(self):
        return self.raw.tolist()

    def reshape(self, dims):
        return BoundTensor(tp.reshape(self.raw, dims))

    def copy(self):
        return BoundTensor(tp.cast(self.raw))

    def sum(self, axes=None):
        return BoundTensor(tp.reduce("sum", self.raw, axes=axes))

    def norm(self, p=2.0):
        return tp.reduce("norm", self.raw, p=p).item()

    def convert_to(self, name, deep=False):
        return tp.convert_to(self.raw, name, deep)

    def __repr__(self):
        return tp.render(self.raw)

    # -- arithmetic operators ---------------------------------------------

    def __add__(self, other):
        return BoundTensor(tp.add(self.raw, _unwrap(other)))

    def __radd__(self, other):
        return BoundTensor(tp.add(_unwrap(other), self.raw))

    def __sub__(self, other):
        return BoundTensor(tp.subtract(self.raw, _unwrap(other)))

    def __rsub__(self, other):
        return BoundTensor(tp.subtract(_unwrap(other), self.raw))

    def __mul__(self, other):
        return BoundTensor(tp.multiply(self.raw, _unwrap(other)))

    def __rmul__(self, other):
        return BoundTensor(tp.multiply(_unwrap(other), self.raw))

    def __truediv__(self, other):
        return BoundTensor(tp.divide(self.raw, _unwrap(other)))

    def __rtruediv__(self, other):
        return BoundTensor(tp.divide(_unwrap(other), self.raw))

    def __neg__(self):
        return BoundTensor(tp.negate(self.raw))

    def __abs__(self):
        return BoundTensor(tp.absolute(self.raw))

    def __matmul__(self, other):
        return BoundTensor(tp.matmul(self.raw, _unwrap(other)))

    def __rmatmul__(self, other):
        return BoundTensor(tp.matmul(_unwrap(other), self.raw))

    # in-place forms never reallocate the left operand's storage
    def __iadd__(self, other):
        tp.add(self.raw, _unwrap(other), dest=self.raw)
        return self

    def __isub__(self, other):
        tp.subtract(self.raw, _unwrap(other), dest=self.raw)
        return self

    def __imul__(self, other):
        tp.multiply(self.raw, _unwrap(other), dest=self.raw)
        return self

    def __itruediv__(self, other):
        tp.divide(self.raw, _unwrap(other), dest=self.raw)
        return self

    # -- comparison --------------------------------------------------------

    def __eq__(self, other):
        return tp.array_equal(self.raw, _unwrap(other))

    def __ne__(self, other):
        return not self.__eq__(other)

    __hash__ = None

    # -- indexing ------------------------------------------------------------

    def __getitem__(self, key):
        if isinstance(key, (IndexHandle, _ix.IndexExpr, _ix.BoundIndex)):
            return BoundTensor(tp.apply_index(self.raw, _as_index(key)))
        return BoundTensor(tp.apply_index(self.raw, _subscript_parts(key)))

    def __setitem__(self, key, value):
        if isinstance(key, (IndexHandle, _ix.IndexExpr, _ix.BoundIndex)):
            tp.assign_index(self.raw, _as_index(key), _unwrap(value))
            return
        tp.assign_index(self.raw, _subscript_parts(key), _unwrap(value))


def _as_index(key):
    if isinstance(key, IndexHandle):
        return key.inner
    return key


class IndexHandle:
    """Reusable index object; bind once, apply as many times as needed."""

    __slots__ = ("inner",)

    def __init__(self, inner):
        self.inner = inner

    @property
    def stage(self):
        if isinstance(self.inner, _ix.BoundIndex):
            return self.inner.stage
        return "unbound"

    def bind(self, dims) -> "IndexHandle":
        return IndexHandle(tp.bind_to_size(self.inner, dims))

    def bind_strides(self, strides, offset=0) -> "IndexHandle":
        return IndexHandle(tp.bind_to_strides(self.inner, strides, offset))

    def bind_to(self, t) -> "IndexHandle":
        """Fully bind to a tensor's dims and strides in one step."""
        t = _unwrap(t)
        return IndexHandle(tp.bind_to_strides(
            tp.bind_to_size(self.inner, t.dims), t.strides))

    def __repr__(self):
        return f"<index handle {self.inner!r}>"


class _IndexFactory:
    """``index[...]`` builds reusable index expressions from native syntax."""

    def __getitem__(self, key):
        return IndexHandle(tp.build_index(*_subscript_parts(key)))


index = _IndexFactory()
