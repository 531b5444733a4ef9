"""Index algebra: atoms, expressions, reusable bound indexes, and application.

An index expression is a sequence of atoms: scalars, ranges, colons, one
optional ellipsis, and at most one advanced atom (an integer index array or
a boolean mask).  Basic expressions (no advanced atom) always apply as
storage-sharing views; advanced expressions copy.

Expressions can be pre-bound to a tensor size (negative indices resolved,
indices validated, masks turned into explicit index tuples) and further to
tensor strides (index tuples turned into relative byte offsets), so the
preprocessing cost is paid once when the same index is used repeatedly.
Bound and unbound forms apply identically.
"""

from __future__ import annotations

import math

from . import dispatch, dtypes, ops
from . import tensors as tz
from .errors import IndexingError, ReadOnlyError, ShapeError, StrictModeError
from .tensors import Scalar, Tensor

SCALAR = "scalar"
RANGE = "range"
COLON = "colon"
ELLIPSIS = "ellipsis"
ARRAY = "index_array"
MASK = "mask"

BASIC_KINDS = (SCALAR, RANGE, COLON, ELLIPSIS)


class IndexAtom:
    __slots__ = ("kind", "value")

    def __init__(self, kind: str, value=None):
        self.kind = kind
        self.value = value

    def __repr__(self):
        return f"<{self.kind} atom>" if self.value is None else \
            f"<{self.kind} atom {self.value!r}>"


def _rows_from_array(t: Tensor):
    """Index-array rows as tuples; 2-D arrays read as rows-of-index-tuples."""
    if t.ndim == 1:
        return [(int(v),) for v in tz.read_values(t)], 1
    if t.ndim == 2:
        m, w = t.dims
        t.storage.stream.sync()
        unpack, _ = dtypes.codec(t.dtype, t.byteorder)
        buf = t.storage.view()
        rows = [tuple(int(unpack(buf, t.offset + r * t.strides[0]
                                 + c * t.strides[1]))
                      for c in range(w)) for r in range(m)]
        return rows, w
    raise IndexingError("index arrays must be 1-D or 2-D")


def _atom_from(obj) -> list[IndexAtom]:
    if isinstance(obj, IndexAtom):
        return [obj]
    if isinstance(obj, IndexExpr):
        return list(obj.atoms)
    if isinstance(obj, BoundIndex):
        return list(obj.expr.atoms)
    if obj is Ellipsis:
        return [IndexAtom(ELLIPSIS)]
    if isinstance(obj, bool):
        raise IndexingError("a bare boolean is not an index; use a mask tensor")
    if isinstance(obj, int):
        return [IndexAtom(SCALAR, obj)]
    if isinstance(obj, Scalar):
        if obj.dtype.is_integer:
            return [IndexAtom(SCALAR, int(obj.value))]
        raise IndexingError(f"scalar of dtype {obj.dtype.name} cannot index")
    if isinstance(obj, slice):
        if obj.step == 0:
            raise IndexingError("range step must be nonzero")
        if obj.start is None and obj.stop is None and obj.step in (None, 1):
            return [IndexAtom(COLON)]
        return [IndexAtom(RANGE, obj)]
    if isinstance(obj, Tensor):
        if obj.dtype is dtypes.BOOL:
            return [IndexAtom(MASK, obj)]
        if obj.dtype.is_integer:
            return [IndexAtom(ARRAY, obj)]
        raise IndexingError(f"tensor of dtype {obj.dtype.name} cannot index")
    if isinstance(obj, (list, tuple)):
        t = tz.tensor_from_nested(list(obj))
        return _atom_from(t)
    raise IndexingError(f"cannot index with {type(obj).__name__!r} object")


class IndexExpr:
    __slots__ = ("atoms", "is_basic")

    def __init__(self, atoms):
        atoms = tuple(atoms)
        if sum(1 for a in atoms if a.kind == ELLIPSIS) > 1:
            raise IndexingError("at most one ellipsis per index expression")
        if sum(1 for a in atoms if a.kind in (ARRAY, MASK)) > 1:
            raise IndexingError(
                "at most one index array or mask per expression")
        self.atoms = atoms
        self.is_basic = all(a.kind in BASIC_KINDS for a in atoms)

    def __repr__(self):
        return f"<index expr {list(self.atoms)!r} basic={self.is_basic}>"


def build_index(*parts) -> IndexExpr:
    """Assemble an index expression from atoms, host objects, or other
    (possibly bound) index expressions."""
    atoms: list[IndexAtom] = []
    for part in parts:
        atoms.extend(_atom_from(part))
    return IndexExpr(atoms)


# ---------------------------------------------------------------------------
# Binding
# ---------------------------------------------------------------------------

SIZE_BOUND = "size_bound"
STRIDE_BOUND = "stride_bound"


class BoundIndex:
    __slots__ = ("stage", "expr", "dims", "slots", "strides", "bound_offset",
                 "count")

    def __init__(self, stage, expr, dims, slots, count,
                 strides=None, bound_offset=0):
        self.stage = stage
        self.expr = expr
        self.dims = dims
        self.slots = slots
        self.count = count  # selected elements of the advanced atom, if any
        self.strides = strides
        self.bound_offset = bound_offset

    @property
    def result_dims(self) -> tuple[int, ...]:
        out = []
        for slot in self.slots:
            kind = slot[0]
            if kind == RANGE:
                out.append(slot[3])
            elif kind == ARRAY:
                out.append(len(slot[1]))
        return tuple(out)

    def __repr__(self):
        return f"<{self.stage} index over dims {self.dims}>"


def _consumed(atom: IndexAtom, resolved_width=None) -> int:
    if atom.kind in (SCALAR, RANGE, COLON):
        return 1
    if atom.kind == ARRAY:
        return 1 if atom.value.ndim == 1 else atom.value.dims[1]
    if atom.kind == MASK:
        return atom.value.ndim
    return 0


def bind_to_size(e: IndexExpr, dims) -> BoundIndex:
    """Validate the expression against tensor dims.

    Negative scalars and ranges resolve, index arrays are bounds-checked
    elementwise, and masks reduce to explicit index tuples with their
    selected count recorded.  Binding never mutates the source expression.
    """
    if isinstance(e, BoundIndex):
        raise IndexingError("index is already bound; re-binding is not allowed")
    dims = tuple(int(d) for d in dims)
    fixed = sum(_consumed(a) for a in e.atoms)
    has_ellipsis = any(a.kind == ELLIPSIS for a in e.atoms)
    if fixed > len(dims):
        raise IndexingError(
            f"expression consumes {fixed} dimensions, tensor has {len(dims)}")
    pad = len(dims) - fixed
    atoms: list[IndexAtom] = []
    for a in e.atoms:
        if a.kind == ELLIPSIS:
            atoms.extend(IndexAtom(COLON) for _ in range(pad))
        else:
            atoms.append(a)
    if not has_ellipsis:
        atoms.extend(IndexAtom(COLON) for _ in range(pad))

    slots = []
    count = None
    pos = 0
    for a in atoms:
        if a.kind == SCALAR:
            dim = dims[pos]
            i = a.value + dim if a.value < 0 else a.value
            if not 0 <= i < dim:
                raise IndexingError(
                    f"index {a.value} out of range for extent {dim}")
            slots.append((SCALAR, i))
            pos += 1
        elif a.kind == COLON:
            slots.append((RANGE, 0, 1, dims[pos]))
            pos += 1
        elif a.kind == RANGE:
            start, _, step, length = _resolve_slice(a.value, dims[pos])
            slots.append((RANGE, start, step, length))
            pos += 1
        elif a.kind == ARRAY:
            rows, width = _rows_from_array(a.value)
            resolved = []
            for row in rows:
                fixed_row = []
                for j, idx in enumerate(row):
                    dim = dims[pos + j]
                    i = idx + dim if idx < 0 else idx
                    if not 0 <= i < dim:
                        raise IndexingError(
                            f"index {idx} out of range for extent {dim}")
                    fixed_row.append(i)
                resolved.append(tuple(fixed_row))
            slots.append((ARRAY, resolved, width, None))
            count = len(resolved)
            pos += width
        elif a.kind == MASK:
            mask = a.value
            rank = mask.ndim
            expected = dims[pos:pos + rank]
            if mask.dims != expected:
                raise IndexingError(
                    f"mask dims {mask.dims} do not match the indexed "
                    f"dims {expected}")
            rows = [idx for idx, v in zip(_mask_indices(mask.dims),
                                          tz.read_values(mask)) if v]
            slots.append((ARRAY, rows, rank, None))
            count = len(rows)
            pos += rank
    return BoundIndex(SIZE_BOUND, e, dims, slots, count)


def _resolve_slice(sl: slice, dim: int):
    start, stop, step = sl.indices(dim)
    if step > 0:
        length = max(0, (stop - start + step - 1) // step)
    else:
        length = max(0, (stop - start + step + 1) // step)
    return start, stop, step, length


def _mask_indices(dims):
    """Index tuples of a mask in logical column-major order."""
    if not dims:
        yield ()
        return
    idx = [0] * len(dims)
    for _ in range(math.prod(dims)):
        yield tuple(idx)
        for k in range(len(dims)):
            idx[k] += 1
            if idx[k] < dims[k]:
                break
            idx[k] = 0


def bind_to_strides(b: BoundIndex, strides, offset: int = 0) -> BoundIndex:
    """Convert the advanced atom's index tuples to relative byte offsets."""
    if not isinstance(b, BoundIndex) or b.stage != SIZE_BOUND:
        raise IndexingError("bind_to_strides needs a size-bound index")
    strides = tuple(int(s) for s in strides)
    if len(strides) != len(b.dims):
        raise IndexingError(
            f"{len(strides)} strides for {len(b.dims)} bound dimensions")
    slots = []
    pos = 0
    for slot in b.slots:
        if slot[0] == ARRAY:
            rows, width = slot[1], slot[2]
            rel = [sum(i * strides[pos + j] for j, i in enumerate(row))
                   for row in rows]
            slots.append((ARRAY, rows, width, rel))
            pos += width
        else:
            slots.append(slot)
            pos += 1
    return BoundIndex(STRIDE_BOUND, b.expr, b.dims, slots, b.count,
                      strides=strides, bound_offset=offset)


def _bind_for(t: Tensor, e) -> BoundIndex:
    if isinstance(e, BoundIndex):
        if e.dims != t.dims:
            raise IndexingError(
                f"index bound to dims {e.dims} applied to tensor {t.dims}")
        if e.stage == STRIDE_BOUND and e.strides != t.strides:
            raise IndexingError(
                f"index bound to strides {e.strides} applied to tensor "
                f"with strides {t.strides}")
        return e
    if isinstance(e, IndexExpr):
        return bind_to_size(e, t.dims)
    if isinstance(e, tuple):
        return bind_to_size(build_index(*e), t.dims)
    return bind_to_size(build_index(e), t.dims)


# ---------------------------------------------------------------------------
# Application
# ---------------------------------------------------------------------------

def _advanced_offsets(slot, strides, pos) -> list[int]:
    rows, width, rel = slot[1], slot[2], slot[3]
    if rel is not None:
        return rel
    return [sum(i * strides[pos + j] for j, i in enumerate(row))
            for row in rows]


def _selection(t: Tensor, b: BoundIndex):
    """Per-result-axis byte-offset tables plus the scalar-base contribution."""
    base = t.offset
    axes: list[list[int]] = []
    dims: list[int] = []
    pos = 0
    for slot in b.slots:
        kind = slot[0]
        if kind == SCALAR:
            base += slot[1] * t.strides[pos]
            pos += 1
        elif kind == RANGE:
            _, start, step, length = slot
            stride = t.strides[pos]
            axes.append([start * stride + i * step * stride
                         for i in range(length)])
            dims.append(length)
            pos += 1
        else:
            axes.append(_advanced_offsets(slot, t.strides, pos))
            dims.append(len(slot[1]))
            pos += slot[2]
    return base, tuple(dims), axes


def _source_offsets(base, dims, axes):
    """Source byte offsets in logical column-major result order."""
    if not dims:
        yield base
        return
    total = math.prod(dims)
    if total == 0:
        return
    idx = [0] * len(dims)
    current = [a[0] for a in axes]
    for _ in range(total):
        yield base + sum(current)
        for k in range(len(dims)):
            idx[k] += 1
            if idx[k] < dims[k]:
                current[k] = axes[k][idx[k]]
                break
            idx[k] = 0
            current[k] = axes[k][0]


def apply_index(t: Tensor, e) -> Tensor:
    """Index a tensor: basic expressions view, advanced expressions copy."""
    b = _bind_for(t, e)
    if b.expr.is_basic:
        offset = t.offset
        dims: list[int] = []
        strides: list[int] = []
        pos = 0
        for slot in b.slots:
            if slot[0] == SCALAR:
                offset += slot[1] * t.strides[pos]
            else:
                _, start, step, length = slot
                offset += start * t.strides[pos]
                dims.append(length)
                strides.append(step * t.strides[pos])
            pos += 1
        return Tensor(t.storage, offset, tuple(dims), tuple(strides),
                      t.dtype, t.byteorder)

    base, dims, axes = _selection(t, b)
    out = tz.tensor_create(dims, t.dtype, t.device)
    out.byteorder = t.byteorder
    pairs = list(zip(tz.iter_offsets(out), _source_offsets(base, dims, axes)))
    handle = dispatch.lookup("core", t.device.type.name, "gather")
    exec_stream = out.storage.stream
    if t.storage.stream is not exec_stream:
        t.storage.stream.sync()
    dst_buf = out.storage.view()
    src_buf = t.storage.view()
    size = t.dtype.size
    exec_stream.submit(lambda: handle(dst_buf, src_buf, pairs, size))
    return out


def assign_index(t: Tensor, e, value, mode: str = "standard") -> None:
    """Write into the selected elements of ``t``.

    The value broadcasts over the selection; when it may overlap the
    destination region it is materialized first, so the result always equals
    copy-then-write semantics.
    """
    if not isinstance(t, Tensor):
        raise ShapeError("assignment target must be a tensor")
    if t.readonly:
        raise ReadOnlyError("assignment target is read-only")
    b = _bind_for(t, e)

    if b.expr.is_basic:
        dest = apply_index(t, b)
        value = ops.as_operand(value)
        if isinstance(value, Scalar):
            ops.fill(dest, value, mode)
        else:
            ops.copy(value, dest, mode)
        return

    base, sel_dims, axes = _selection(t, b)
    targets = list(_source_offsets(base, sel_dims, axes))
    value = ops.as_operand(value)
    exec_stream = t.storage.stream

    if isinstance(value, Scalar):
        cast_value = dtypes.cast_scalar(value.value, t.dtype, mode)
        _, pack = dtypes.codec(t.dtype, t.byteorder)
        handle = dispatch.lookup("core", t.device.type.name, "scatter_fill")
        buf = t.storage.view()
        exec_stream.submit(lambda: handle(targets, buf, pack, cast_value))
        return

    if value.device is not t.device:
        if not dtypes.implicit_casting():
            raise StrictModeError(
                "cross-device assignment needs implicit casting, which is disabled")
        value = ops.cast(value, device=t.device, mode=mode)
    elif not dtypes.implicit_casting() and value.dtype is not t.dtype:
        raise StrictModeError(
            "dtype-converting assignment needs implicit casting, which is disabled")

    tz.broadcast_dims(value.dims, sel_dims)
    value_b = tz.broadcast_to(value, sel_dims)
    cleanups: list = []
    if tz.pair_overlap(value_b, t) != tz.OverlapVerdict.DISJOINT:
        value_b = ops._intermediate_clone(value_b, cleanups)

    pairs = list(zip(targets, tz.iter_offsets(value_b)))
    ctx = dtypes.CastContext(mode)
    _, pack = dtypes.codec(t.dtype, t.byteorder)
    to = t.dtype

    def store(buf, off, v):
        pack(buf, off, dtypes.cast_scalar(v, to, mode, ctx))

    s_unpack, _ = dtypes.codec(value_b.dtype, value_b.byteorder)
    handle = dispatch.lookup("core", t.device.type.name, "scatter")
    if value_b.storage.stream is not exec_stream:
        value_b.storage.stream.sync()
    d_buf = t.storage.view()
    s_buf = value_b.storage.view()

    def run():
        handle(pairs, d_buf, store, s_buf, s_unpack)
        ctx.flush()

    exec_stream.submit(run)
    ops._finish(exec_stream, cleanups)
