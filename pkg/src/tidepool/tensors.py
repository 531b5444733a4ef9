"""Strided, typed tensor views over storage.

Tensors are cheap value-like handles: a storage reference, a byte offset,
up to :data:`MAX_DIMS` extents with signed byte strides, a dtype, and a
byte-order flag.  Freshly created tensors are contiguous column-major (the
first axis varies fastest); general strides, including negative and zero
strides, are supported everywhere.  A tensor whose strides map two distinct
index tuples to one byte offset is self-overlapping and treated as
read-only.
"""

from __future__ import annotations

import math
import threading

from . import devices, dispatch, dtypes, storage as storage_mod
from .errors import CastError, DeviceError, ReadOnlyError, ShapeError

MAX_DIMS = 8  # single relaxation point for the dimension limit

_defaults = threading.local()


def set_default_dtype(d: dtypes.DType) -> None:
    _defaults.dtype = d


def set_default_device(dev: devices.Device) -> None:
    _defaults.device = dev


def default_dtype() -> dtypes.DType:
    return getattr(_defaults, "dtype", dtypes.DOUBLE)


def default_device() -> devices.Device:
    return getattr(_defaults, "device", None) or devices.cpu()


class Scalar:
    """Lightweight typed scalar, convertible to and from 0-dim tensors."""

    __slots__ = ("value", "dtype")

    def __init__(self, value, dtype: dtypes.DType | None = None):
        if dtype is None:
            dtype = dtypes.infer_scalar_dtype(value)
        self.dtype = dtype
        self.value = dtypes.cast_scalar(value, dtype)

    def __repr__(self):
        return f"{self.value!r} ({self.dtype.name})"


class OverlapVerdict:
    DISJOINT = "disjoint"
    EXACT = "exact_overlap"
    POSSIBLE = "possible_overlap"


def column_major_strides(dims, itemsize: int) -> tuple[int, ...]:
    strides = []
    step = itemsize
    for extent in dims:
        strides.append(step)
        step *= extent
    return tuple(strides)


def _check_dims(dims) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if len(dims) > MAX_DIMS:
        raise ShapeError(f"{len(dims)} dimensions exceed the limit of {MAX_DIMS}")
    if any(d < 0 for d in dims):
        raise ShapeError(f"negative extent in dims {dims}")
    return dims


class Tensor:
    __slots__ = ("storage", "offset", "dims", "strides", "dtype", "byteorder",
                 "_self_overlap", "_deallocated")

    def __init__(self, storage: storage_mod.Storage, offset: int, dims,
                 strides, dtype: dtypes.DType, byteorder: str | None = None):
        dims = _check_dims(dims)
        strides = tuple(int(s) for s in strides)
        if len(strides) != len(dims):
            raise ShapeError("dims and strides must have equal length")
        self.storage = storage
        self.offset = int(offset)
        self.dims = dims
        self.strides = strides
        self.dtype = dtype
        self.byteorder = byteorder if byteorder is not None else storage.byteorder
        self._self_overlap: bool | None = None
        self._deallocated = False
        _check_addressable(self)
        storage.retain()

    # -- basic queries -----------------------------------------------------

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def device(self) -> devices.Device:
        return self.storage.device

    @property
    def nelem(self) -> int:
        return math.prod(self.dims)

    @property
    def readonly(self) -> bool:
        return self.storage.readonly or self_overlap(self)

    def item(self):
        """The single element's value; requires exactly one element."""
        if self.nelem != 1:
            raise ShapeError(f"item() needs exactly one element, not {self.nelem}")
        self.storage.stream.sync()
        unpack, _ = dtypes.codec(self.dtype, self.byteorder)
        return unpack(self.storage.view(), self.offset)

    def tolist(self):
        """Nested host lists, outermost list along axis 0."""
        self.storage.stream.sync()
        unpack, _ = dtypes.codec(self.dtype, self.byteorder)
        buf = self.storage.view()

        def build(axis, off):
            if axis == self.ndim:
                return unpack(buf, off)
            return [build(axis + 1, off + i * self.strides[axis])
                    for i in range(self.dims[axis])]

        return build(0, self.offset)

    def __repr__(self):
        return render(self)


def _check_addressable(t: Tensor) -> None:
    if t.nelem == 0:
        return
    lo = hi = t.offset
    for d, s in zip(t.dims, t.strides):
        span = s * (d - 1)
        if span >= 0:
            hi += span
        else:
            lo += span
    if lo < 0 or hi + t.dtype.size > t.storage.nbytes:
        raise ShapeError(
            f"view reaches bytes [{lo}, {hi + t.dtype.size}) outside storage "
            f"of {t.storage.nbytes} bytes")


def byte_extent(t: Tensor) -> tuple[int, int]:
    """Half-open byte interval [lo, hi) touched by the view; empty -> (0, 0)."""
    if t.nelem == 0:
        return (0, 0)
    lo = hi = t.offset
    for d, s in zip(t.dims, t.strides):
        span = s * (d - 1)
        if span >= 0:
            hi += span
        else:
            lo += span
    return (lo, hi + t.dtype.size)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def tensor_create(dims, dtype: dtypes.DType | None = None,
                  device: devices.Device | None = None) -> Tensor:
    """Uninitialized contiguous column-major tensor with fresh storage."""
    dims = _check_dims(dims)
    dtype = dtype or default_dtype()
    device = device or default_device()
    nbytes = math.prod(dims) * dtype.size
    store = storage_mod.storage_alloc(device, nbytes, dtype)
    return Tensor(store, 0, dims, column_major_strides(dims, dtype.size), dtype)


def tensor_from_storage(store: storage_mod.Storage,
                        dims=None, dtype: dtypes.DType | None = None,
                        offset: int = 0) -> Tensor:
    dtype = dtype or store.dtype
    if dims is None:
        dims = ((store.nbytes - offset) // dtype.size,)
    return Tensor(store, offset, dims,
                  column_major_strides(dims, dtype.size), dtype)


def _nested_dims(data) -> tuple[int, ...]:
    dims = []
    probe = data
    while isinstance(probe, (list, tuple)):
        dims.append(len(probe))
        probe = probe[0] if probe else None
    return tuple(dims)


def _walk_nested(data, dims, depth=0):
    if depth == len(dims):
        if isinstance(data, (list, tuple)):
            raise ShapeError("ragged nesting: deeper than the inferred shape")
        yield data
        return
    if not isinstance(data, (list, tuple)) or len(data) != dims[depth]:
        raise ShapeError("ragged nesting: sequence lengths disagree")
    for item in data:
        yield from _walk_nested(item, dims, depth + 1)


def tensor_from_nested(data, dtype: dtypes.DType | None = None,
                       device: devices.Device | None = None) -> Tensor:
    """Build a tensor from nested sequences; dims come from the nesting.

    When dtype is omitted it is the promotion fold of the element types
    (host ints count as int64, floats as double, complex as complex-double).
    """
    if isinstance(data, Tensor):
        raise CastError("tensor_from_nested expects host data, not a tensor")
    dims = _nested_dims(data)
    values = list(_walk_nested(data, dims))
    if dtype is None:
        folded = dtypes.BOOL
        for v in values:
            folded = dtypes.promote(folded, dtypes.infer_scalar_dtype(v))
        dtype = folded
    t = tensor_create(dims, dtype, device or devices.cpu())
    _, pack = dtypes.codec(dtype, t.byteorder)
    buf = t.storage.view()
    # values arrive outermost-axis-first; lay them out at logical positions
    for logical, off in zip(_logical_order_indices(dims), iter_offsets(t)):
        pack(buf, off, dtypes.cast_scalar(values[logical], dtype))
    return t


def _logical_order_indices(dims):
    """Flat positions of outermost-first nesting visited in column-major order."""
    n = math.prod(dims)
    if not dims:
        yield 0
        return
    # row-major weight of each axis in the flat `values` list
    weights = []
    w = 1
    for d in reversed(dims):
        weights.append(w)
        w *= d
    weights.reverse()
    idx = [0] * len(dims)
    for _ in range(n):
        yield sum(i * w for i, w in zip(idx, weights))
        for axis in range(len(dims)):
            idx[axis] += 1
            if idx[axis] < dims[axis]:
                break
            idx[axis] = 0


def scalar_tensor(value, dtype: dtypes.DType | None = None,
                  device: devices.Device | None = None) -> Tensor:
    """0-dim tensor holding one scalar value."""
    if isinstance(value, Scalar):
        dtype = dtype or value.dtype
        value = value.value
    dtype = dtype or dtypes.infer_scalar_dtype(value)
    t = tensor_create((), dtype, device)
    _, pack = dtypes.codec(dtype, t.byteorder)
    pack(t.storage.view(), 0, dtypes.cast_scalar(value, dtype))
    return t


def as_scalar(t: Tensor) -> Scalar:
    return Scalar(t.item(), t.dtype)


# ---------------------------------------------------------------------------
# Iteration helpers
# ---------------------------------------------------------------------------

def iter_offsets(t: Tensor):
    """Byte offsets of every element in logical column-major order."""
    if t.nelem == 0:
        return
    if not t.dims:
        yield t.offset
        return
    dims, strides = t.dims, t.strides
    n = len(dims)
    idx = [0] * n
    off = t.offset
    total = t.nelem
    for _ in range(total):
        yield off
        for k in range(n):
            idx[k] += 1
            off += strides[k]
            if idx[k] < dims[k]:
                break
            idx[k] = 0
            off -= strides[k] * dims[k]


def read_values(t: Tensor) -> list:
    """All element values in logical column-major order."""
    t.storage.stream.sync()
    unpack, _ = dtypes.codec(t.dtype, t.byteorder)
    buf = t.storage.view()
    return [unpack(buf, off) for off in iter_offsets(t)]


# ---------------------------------------------------------------------------
# Views
# ---------------------------------------------------------------------------

def _view(t: Tensor, offset, dims, strides, dtype=None, byteorder=None) -> Tensor:
    return Tensor(t.storage, offset, dims, strides,
                  dtype or t.dtype, byteorder or t.byteorder)


def reshape(t: Tensor, dims) -> Tensor:
    """Reinterpret the elements (column-major order) under new extents.

    Returns a view whenever the new shape is expressible over the existing
    strides — always the case for contiguous column-major input — and a
    contiguous copy otherwise.  ``is_view(result, t)`` tells the two apart.
    """
    dims = _check_dims(dims)
    if math.prod(dims) != t.nelem:
        raise ShapeError(f"cannot reshape {t.nelem} elements into {dims}")
    strides = _reshape_strides(t, dims)
    if strides is not None:
        return _view(t, t.offset, dims, strides)
    copy = tensor_create(dims, t.dtype, t.device)
    copy.byteorder = t.byteorder
    _raw_gather(t, copy)
    return copy


def _reshape_strides(t: Tensor, new_dims) -> tuple[int, ...] | None:
    """Strides presenting ``t``'s column-major element order as ``new_dims``."""
    if t.nelem == 0:
        return column_major_strides(new_dims, t.dtype.size)
    # squeeze extent-1 axes of the source; group into contiguous runs
    old = [(d, s) for d, s in zip(t.dims, t.strides) if d != 1]
    if not old:
        return tuple(t.dtype.size if d == 1 else 0 for d in new_dims) \
            if all(d == 1 for d in new_dims) else None
    runs: list[list[tuple[int, int]]] = [[old[0]]]
    for d, s in old[1:]:
        pd, ps = runs[-1][-1]
        if s == ps * pd:
            runs[-1].append((d, s))
        else:
            runs.append([(d, s)])
    run_sizes = [math.prod(d for d, _ in run) for run in runs]
    run_strides = [run[0][1] for run in runs]
    out: list[int] = []
    run_i = 0
    filled = 1  # elements of the current run already assigned
    for d in new_dims:
        if d == 1:
            out.append(t.dtype.size)
            continue
        if run_i >= len(runs):
            return None
        stride = run_strides[run_i] * filled
        if filled * d > run_sizes[run_i]:
            return None
        out.append(stride)
        filled *= d
        if filled == run_sizes[run_i]:
            run_i += 1
            filled = 1
    if run_i != len(runs) or filled != 1:
        return None
    return tuple(out)


def is_view(result: Tensor, source: Tensor) -> bool:
    return result.storage is source.storage


def permute_axes(t: Tensor, order) -> Tensor:
    order = tuple(int(a) for a in order)
    if sorted(order) != list(range(t.ndim)):
        raise ShapeError(f"{order} is not a permutation of 0..{t.ndim - 1}")
    return _view(t, t.offset,
                 tuple(t.dims[a] for a in order),
                 tuple(t.strides[a] for a in order))


def transpose(t: Tensor) -> Tensor:
    """Matrix transpose; a 1-D vector of length n transposes to a 1xn matrix."""
    if t.ndim == 1:
        return _view(t, t.offset, (1, t.dims[0]), (t.dtype.size, t.strides[0]))
    if t.ndim == 2:
        return permute_axes(t, (1, 0))
    return permute_axes(t, tuple(reversed(range(t.ndim))))


def broadcast_dims(src_dims, dst_dims) -> None:
    """Validate column-major-first broadcast of src onto dst (leading axes align)."""
    if len(src_dims) > len(dst_dims):
        raise ShapeError(f"cannot broadcast {src_dims} to fewer-dim {dst_dims}")
    for k, d in enumerate(src_dims):
        if d != 1 and d != dst_dims[k]:
            raise ShapeError(
                f"cannot broadcast {src_dims} to {dst_dims}: axis {k} "
                f"({d} vs {dst_dims[k]})")


def broadcast_to(t: Tensor, dims) -> Tensor:
    """Zero-stride view of ``t`` with the given dims.

    Shapes align on leading (fastest-varying) axes, mirroring the
    column-major layout; missing trailing axes behave as extent 1.
    """
    dims = _check_dims(dims)
    broadcast_dims(t.dims, dims)
    strides = []
    for k, d in enumerate(dims):
        if k < t.ndim and t.dims[k] == d:
            strides.append(t.strides[k])
        else:
            strides.append(0)
    return _view(t, t.offset, dims, tuple(strides))


def broadcast_result_dims(a_dims, b_dims) -> tuple[int, ...]:
    out = []
    for k in range(max(len(a_dims), len(b_dims))):
        da = a_dims[k] if k < len(a_dims) else 1
        db = b_dims[k] if k < len(b_dims) else 1
        if da == db or db == 1:
            out.append(da)
        elif da == 1:
            out.append(db)
        else:
            raise ShapeError(f"shapes {a_dims} and {b_dims} do not broadcast "
                             f"(axis {k}: {da} vs {db})")
    return tuple(out)


def diag_view(t: Tensor, k: int = 0) -> Tensor:
    """1-D view on the k-th diagonal of a matrix; writes go through."""
    if t.ndim != 2:
        raise ShapeError("diag_view requires a 2-D tensor")
    rows, cols = t.dims
    if k >= 0:
        length = max(0, min(rows, cols - k))
        offset = t.offset + k * t.strides[1]
    else:
        length = max(0, min(rows + k, cols))
        offset = t.offset - k * t.strides[0]
    if length == 0:
        offset = t.offset
    return _view(t, offset, (length,), (t.strides[0] + t.strides[1],))


def real_view(t: Tensor) -> Tensor:
    if not t.dtype.is_complex:
        return _view(t, t.offset, t.dims, t.strides)
    return _view(t, t.offset, t.dims, t.strides,
                 dtype=dtypes.real_counterpart(t.dtype))


def imag_view(t: Tensor) -> Tensor:
    if not t.dtype.is_complex:
        raise CastError(f"imag_view requires a complex tensor, not {t.dtype.name}")
    half = t.dtype.component_size
    return _view(t, t.offset + half, t.dims, t.strides,
                 dtype=dtypes.real_counterpart(t.dtype))


# ---------------------------------------------------------------------------
# Overlap analysis
# ---------------------------------------------------------------------------

def self_overlap(t: Tensor) -> bool:
    """Conservative self-overlap test (may err only toward True).

    Axes of extent 1 are dropped; the rest are sorted by |stride|.  With a
    running covered extent starting at the element size, each axis must
    start at or beyond the bytes covered so far, otherwise two index tuples
    can land on one byte.
    """
    if t._self_overlap is None:
        t._self_overlap = _self_overlap_test(t.dims, t.strides, t.dtype.size)
    return t._self_overlap


def _self_overlap_test(dims, strides, itemsize: int) -> bool:
    axes = [(abs(s), d) for d, s in zip(dims, strides) if d > 1]
    if any(s == 0 for s, _ in axes):
        return True
    axes.sort()
    covered = itemsize
    for s, d in axes:
        if s < covered:
            return True
        covered += s * (d - 1)
    return False


def pair_overlap(a: Tensor, b: Tensor) -> str:
    """Three-valued overlap verdict; ``possible_overlap`` is conservative."""
    if a.storage is not b.storage:
        return OverlapVerdict.DISJOINT
    lo_a, hi_a = byte_extent(a)
    lo_b, hi_b = byte_extent(b)
    if hi_a <= lo_b or hi_b <= lo_a:
        return OverlapVerdict.DISJOINT
    if (a.offset == b.offset and a.dims == b.dims
            and a.strides == b.strides and a.dtype is b.dtype):
        return OverlapVerdict.EXACT
    return OverlapVerdict.POSSIBLE


# ---------------------------------------------------------------------------
# Canonical iteration plans
# ---------------------------------------------------------------------------

class IterPlan:
    """Sorted/merged loop structure visiting the same element multiset as
    naive nested loops over the original dims, for several equally-shaped
    views at once."""

    __slots__ = ("extents", "strides", "total")

    def __init__(self, extents: tuple[int, ...], strides: list[tuple[int, ...]]):
        self.extents = extents
        self.strides = strides
        self.total = math.prod(extents)

    def offsets(self, bases):
        """Yield tuples of byte offsets, one per view."""
        nview = len(self.strides)
        offs = list(bases)
        if not self.extents:
            yield tuple(offs)
            return
        n = len(self.extents)
        idx = [0] * n
        per_axis = [tuple(self.strides[v][k] for v in range(nview))
                    for k in range(n)]
        for _ in range(self.total):
            yield tuple(offs)
            for k in range(n):
                idx[k] += 1
                step = per_axis[k]
                for v in range(nview):
                    offs[v] += step[v]
                if idx[k] < self.extents[k]:
                    break
                idx[k] = 0
                for v in range(nview):
                    offs[v] -= step[v] * self.extents[k]


def build_plan(dims, strides_per_view) -> IterPlan:
    """Sort/merge raw (dims, strides) lists into an :class:`IterPlan`.

    Extent-1 axes are dropped, axes are sorted by |stride| of the first view
    (ties keep original axis order), and consecutive axes merge when
    stride[k+1] == stride[k] * extent[k] holds for every view at once.
    """
    axes = [k for k, d in enumerate(dims) if d != 1]
    if math.prod(dims) == 0:
        return IterPlan((0,), [(0,) for _ in strides_per_view])
    axes.sort(key=lambda k: (abs(strides_per_view[0][k]), k))
    merged_extents: list[int] = []
    merged_strides: list[list[int]] = [[] for _ in strides_per_view]
    for k in axes:
        d = dims[k]
        if merged_extents:
            last = merged_extents[-1]
            if all(strides[k] == merged_strides[i][-1] * last
                   for i, strides in enumerate(strides_per_view)):
                merged_extents[-1] = last * d
                continue
        merged_extents.append(d)
        for i, strides in enumerate(strides_per_view):
            merged_strides[i].append(strides[k])
    return IterPlan(tuple(merged_extents),
                    [tuple(s) for s in merged_strides])


def canonicalize(*views: Tensor) -> IterPlan:
    """Canonical joint iteration plan for equally-dimensioned views."""
    dims = views[0].dims
    for v in views[1:]:
        if v.dims != dims:
            raise ShapeError(f"canonicalize needs equal dims, got {v.dims} vs {dims}")
    return build_plan(dims, [v.strides for v in views])


# ---------------------------------------------------------------------------
# Byte order
# ---------------------------------------------------------------------------

def _flip(order: str) -> str:
    return "big" if order == "little" else "little"


def byteswap(t: Tensor) -> None:
    """Reverse every element's byte order in place and flip the flag.

    Values are preserved; applying byteswap twice restores the exact bits.
    """
    if t.readonly:
        raise ReadOnlyError("byteswap target is read-only")
    if not t.device.type.supports_byteswapped:
        raise DeviceError(
            f"device type {t.device.type.name!r} does not support byte-swapped data")
    handle = dispatch.lookup("core", t.device.type.name, "byteswap")
    plan = canonicalize(t)
    buf = t.storage.view()
    base = t.offset
    dtype = t.dtype
    t.storage.stream.submit(lambda: handle(buf, base, plan, dtype))
    t.byteorder = _flip(t.byteorder)


def set_byteorder(t: Tensor, order: str) -> None:
    """Set the byte-order flag only; the bit pattern is reinterpreted."""
    if order not in ("little", "big"):
        raise ValueError(f"byte order must be 'little' or 'big', not {order!r}")
    if not t.device.type.supports_byteswapped and order != dtypes.NATIVE_ORDER:
        raise DeviceError(
            f"device type {t.device.type.name!r} does not support byte-swapped data")
    t.byteorder = order


# ---------------------------------------------------------------------------
# Deallocation
# ---------------------------------------------------------------------------

_empty_storage: storage_mod.Storage | None = None


def _get_empty_storage() -> storage_mod.Storage:
    global _empty_storage
    if _empty_storage is None or _empty_storage.device is not devices.cpu():
        _empty_storage = storage_mod.storage_alloc(devices.cpu(), 0)
        _empty_storage.retain()  # keep alive across tensor churn
    return _empty_storage


def dealloc(t: Tensor) -> None:
    """Force-release the tensor's data, leaving a safe empty 0-dim tensor.

    The handle stays valid (printing, querying, further dealloc calls all
    work); the former storage's allocation returns to its device as soon as
    no other tensor uses it.
    """
    if t._deallocated:
        return
    old = t.storage
    old.stream.sync()
    t.storage = _get_empty_storage()
    t.storage.retain()
    t.offset = 0
    t.dims = ()
    t.strides = ()
    t.dtype = dtypes.UINT8
    t.byteorder = dtypes.NATIVE_ORDER
    t._self_overlap = None
    t._deallocated = True
    old.drop()


# ---------------------------------------------------------------------------
# Raw data movement (shared by reshape-copy and serialization staging)
# ---------------------------------------------------------------------------

def _raw_gather(src: Tensor, dst: Tensor) -> None:
    """Byte-exact element copy from src to dst in logical order.

    Both tensors must share dtype and element count; dispatched through the
    device function table and run on the destination stream.
    """
    pairs = list(zip(iter_offsets(dst), iter_offsets(src)))
    handle = dispatch.lookup("core", dst.device.type.name, "gather")
    if src.storage.stream is not dst.storage.stream:
        src.storage.stream.sync()
    dst_buf = dst.storage.view()
    src_buf = src.storage.view()
    size = src.dtype.size
    dst.storage.stream.submit(lambda: handle(dst_buf, src_buf, pairs, size))


def contiguous_clone(t: Tensor) -> Tensor:
    """Fresh contiguous column-major tensor with identical bytes per element."""
    out = tensor_create(t.dims, t.dtype, t.device)
    out.byteorder = t.byteorder
    _raw_gather(t, out)
    return out


# ---------------------------------------------------------------------------
# Text rendering
# ---------------------------------------------------------------------------

def _format_value(v) -> str:
    if isinstance(v, bool):
        return "T" if v else "F"
    if isinstance(v, complex):
        sign = "+" if v.imag >= 0 else "-"
        return f"{v.real:g}{sign}{abs(v.imag):g}j"
    if isinstance(v, float):
        return f"{v:g}"
    return str(v)


def render(t: Tensor) -> str:
    """Human-readable text: rows x columns per 2-D slice plus a type line."""
    if t._deallocated:
        return "(empty)\n<empty tensor>"
    t.storage.stream.sync()
    unpack, _ = dtypes.codec(t.dtype, t.byteorder)
    buf = t.storage.view()
    order = "" if t.byteorder == dtypes.NATIVE_ORDER else f", {t.byteorder}-endian"
    tail = (f"<tensor {'x'.join(map(str, t.dims)) or 'scalar'} "
            f"{t.dtype.name} on {t.device.name}{order}>")
    if t.nelem == 0:
        return f"(empty)\n{tail}"
    if t.ndim == 0:
        return f"{_format_value(unpack(buf, t.offset))}\n{tail}"

    def matrix_lines(base, rows, cols, rstride, cstride):
        cells = [[_format_value(unpack(buf, base + i * rstride + j * cstride))
                  for j in range(cols)] for i in range(rows)]
        width = max((len(c) for row in cells for c in row), default=1)
        return ["   ".join(c.rjust(width) for c in row) for row in cells]

    lines: list[str] = []
    if t.ndim == 1:
        lines += matrix_lines(t.offset, 1, t.dims[0], 0, t.strides[0])
    else:
        outer_dims = t.dims[2:]
        outer_strides = t.strides[2:]
        for outer_idx in _index_tuples(outer_dims):
            base = t.offset + sum(i * s for i, s in zip(outer_idx, outer_strides))
            if outer_dims:
                lines.append(f"(:,:,{','.join(map(str, outer_idx))})")
            lines += matrix_lines(base, t.dims[0], t.dims[1],
                                  t.strides[0], t.strides[1])
    return "\n".join(lines + [tail])


def _index_tuples(dims):
    if not dims:
        yield ()
        return
    idx = [0] * len(dims)
    total = math.prod(dims)
    for _ in range(total):
        yield tuple(idx)
        for k in range(len(dims)):
            idx[k] += 1
            if idx[k] < dims[k]:
                break
            idx[k] = 0
