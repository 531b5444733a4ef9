"""Core tensor operations and the execution pipeline.

Every operation follows the same path: validate the operands, resolve the
result device (the left-hand tensor operand wins) and dtype (implicit
promotion), broadcast, resolve memory overlaps by materializing overlapping
operands into intermediate buffers, canonicalize the iteration, look the
kernel up in the per-device-type function table, and run it on the
destination storage's stream.

Sticky status flags record quiet arithmetic events (domain violations in
standard mode, integer division by zero); query them with
:func:`get_status` and reset with :func:`clear_status`.
"""

from __future__ import annotations

import math

from . import devices, dispatch, dtypes, kernels
from . import tensors as tz
from .errors import (CastError, DeviceError, DomainError, ReadOnlyError,
                     ShapeError, StrictModeError)
from .tensors import Scalar, Tensor

MODULE = "core"

_status: set[str] = set()

FLOAT_DOMAIN_UNARY = ("square_root", "exponential", "logarithm", "sine",
                      "cosine", "arcsine", "arccosine")


def get_status() -> frozenset:
    return frozenset(_status)


def clear_status() -> None:
    _status.clear()


# ---------------------------------------------------------------------------
# Operand parsing
# ---------------------------------------------------------------------------

_operand_resolvers = []


def register_operand_resolver(fn) -> None:
    """Let plug-ins translate foreign objects into tensors during parsing."""
    _operand_resolvers.append(fn)


def as_operand(x):
    """Normalize an operand to a Tensor or Scalar."""
    if isinstance(x, (Tensor, Scalar)):
        return x
    if isinstance(x, (bool, int, float, complex)):
        return Scalar(x)
    for resolve in _operand_resolvers:
        t = resolve(x)
        if t is not None:
            return t
    if isinstance(x, (list, tuple)):
        return tz.tensor_from_nested(x)
    raise CastError(f"cannot use {type(x).__name__!r} object as a tensor operand")


def _resolve_device(*operands) -> devices.Device:
    for op in operands:
        if isinstance(op, Tensor):
            return op.device
    return tz.default_device()


def common_device_dtype(lhs, rhs):
    """Resolve the (device, dtype) a binary operation will run under.

    The left-hand operand's device always wins; the dtype is the implicit
    promotion of the two.  Raises under strict mode when the operands would
    need converting.
    """
    lhs = as_operand(lhs)
    rhs = as_operand(rhs)
    device = _resolve_device(lhs, rhs)
    if isinstance(lhs, Tensor) and isinstance(rhs, Tensor) and _strict():
        if lhs.device is not rhs.device:
            raise StrictModeError(
                f"operands on {lhs.device.name} and {rhs.device.name}, and "
                "implicit casting is disabled")
        if lhs.dtype is not rhs.dtype:
            raise StrictModeError(
                f"operand dtypes {lhs.dtype.name} and {rhs.dtype.name} "
                "differ, and implicit casting is disabled")
    return device, dtypes.promote(lhs.dtype, rhs.dtype)


# ---------------------------------------------------------------------------
# Operand preparation
# ---------------------------------------------------------------------------

def _strict() -> bool:
    return not dtypes.implicit_casting()


def _materialize_scalar(s: Scalar, dtype: dtypes.DType,
                        device: devices.Device) -> Tensor:
    return tz.scalar_tensor(dtypes.cast_scalar(s.value, dtype), dtype, device)


def _device_transfer(t: Tensor, device: devices.Device) -> Tensor:
    """Copy to another device, normalizing byte order when required there."""
    out = tz.tensor_create(t.dims, t.dtype, device)
    if device.type.supports_byteswapped:
        out.byteorder = t.byteorder
        tz._raw_gather(t, out)
    else:
        _run_copy(t, out)  # value copy re-encodes into native order
    return out


def _dtype_convert(t: Tensor, dtype: dtypes.DType, mode: str) -> Tensor:
    out = tz.tensor_create(t.dims, dtype, t.device)
    _run_copy(t, out, mode)
    return out


def _prepare(t: Tensor, device: devices.Device, dtype: dtypes.DType,
             mode: str, *, exempt_strict: bool = False) -> Tensor:
    strict = _strict() and not exempt_strict
    if t.device is not device:
        if strict:
            raise StrictModeError(
                f"operand on {t.device.name} needs implicit transfer to "
                f"{device.name}, but implicit casting is disabled")
        t = _device_transfer(t, device)
    if t.dtype is not dtype:
        if strict:
            raise StrictModeError(
                f"operand of dtype {t.dtype.name} needs implicit cast to "
                f"{dtype.name}, but implicit casting is disabled")
        t = _dtype_convert(t, dtype, mode)
    return t


def _make_store(dest: Tensor, mode: str, ctx: dtypes.CastContext):
    _, pack = dtypes.codec(dest.dtype, dest.byteorder)
    to = dest.dtype

    def store(buf, off, value):
        pack(buf, off, dtypes.cast_scalar(value, to, mode, ctx))

    return store


def _check_dest(dest: Tensor, dims, device, rdtype, mode: str) -> None:
    if dest.readonly:
        raise ReadOnlyError("destination tensor is read-only")
    if dest.dims != dims:
        raise ShapeError(f"destination dims {dest.dims} != result dims {dims}")
    if dest.device is not device:
        raise DeviceError(
            f"destination lives on {dest.device.name}, operation resolved to "
            f"{device.name}")
    if _strict() and dest.dtype is not rdtype:
        raise StrictModeError(
            f"destination dtype {dest.dtype.name} needs implicit cast from "
            f"{rdtype.name}, but implicit casting is disabled")


def _resolve_aliasing(operand: Tensor, dest: Tensor, cleanups: list,
                      elementwise_aligned_ok: bool) -> Tensor:
    """Clone an operand into an intermediate buffer when it may alias dest."""
    verdict = tz.pair_overlap(operand, dest)
    if verdict == tz.OverlapVerdict.DISJOINT:
        return operand
    if verdict == tz.OverlapVerdict.EXACT and elementwise_aligned_ok:
        return operand
    return _intermediate_clone(operand, cleanups)


def _intermediate_clone(t: Tensor, cleanups: list) -> Tensor:
    """Contiguous copy in a cache-backed buffer.

    The release callback lands in ``cleanups``; the caller must schedule it
    after the consuming kernel so the buffer cannot be recycled early.
    """
    from . import storage as storage_mod
    nbytes = max(t.nelem * t.dtype.size, 1)
    buf = t.device.take_intermediate(nbytes)
    store = storage_mod.Storage(t.device, buf, owned=True, dtype=t.dtype,
                                intermediate=True)
    clone = Tensor(store, 0, t.dims,
                   tz.column_major_strides(t.dims, t.dtype.size),
                   t.dtype, t.byteorder)
    tz._raw_gather(t, clone)
    cleanups.append(store.release)
    return clone


def _finish(exec_stream, cleanups: list) -> None:
    for cb in cleanups:
        exec_stream.submit(cb)


def _sync_other_streams(exec_stream, *tensors) -> None:
    seen = set()
    for t in tensors:
        s = t.storage.stream
        if s is not exec_stream and id(s) not in seen:
            seen.add(id(s))
            s.sync()


# ---------------------------------------------------------------------------
# Binary elementwise
# ---------------------------------------------------------------------------

def binary_elementwise(op: str, a, b, dest: Tensor | None = None,
                       mode: str = "standard") -> Tensor:
    if op not in kernels.BINARY_OPS:
        raise ValueError(f"unknown binary op {op!r}")
    mode = dtypes.check_mode(mode)
    a = as_operand(a)
    b = as_operand(b)
    device = _resolve_device(a, b)

    if isinstance(a, Tensor) and isinstance(b, Tensor):
        if _strict() and a.device is not b.device:
            raise StrictModeError(
                f"operands on {a.device.name} and {b.device.name}, and "
                "implicit casting is disabled")
        if _strict() and a.dtype is not b.dtype:
            raise StrictModeError(
                f"operand dtypes {a.dtype.name} and {b.dtype.name} differ, "
                "and implicit casting is disabled")
        rdtype = dtypes.promote(a.dtype, b.dtype)
    elif isinstance(a, Tensor):
        rdtype = a.dtype if _strict() else dtypes.promote(a.dtype, b.dtype)
    elif isinstance(b, Tensor):
        rdtype = b.dtype if _strict() else dtypes.promote(a.dtype, b.dtype)
    else:
        rdtype = dtypes.promote(a.dtype, b.dtype)

    if isinstance(a, Scalar):
        a = _materialize_scalar(a, rdtype, device)
    if isinstance(b, Scalar):
        b = _materialize_scalar(b, rdtype, device)

    rdims = tz.broadcast_result_dims(a.dims, b.dims)
    if dest is None:
        dest = tz.tensor_create(rdims, rdtype, device)
    else:
        _check_dest(dest, rdims, device, rdtype, mode)

    a = _prepare(a, device, rdtype, mode)
    b = _prepare(b, device, rdtype, mode)

    compute = dtypes.widen_for_compute(rdtype)
    if op == "divide" and mode == "error" and compute.is_integer:
        if any(v == 0 for v in tz.read_values(b)):
            raise DomainError("integer division by zero")

    exec_stream = dest.storage.stream
    cleanups: list = []
    a_b = tz.broadcast_to(_resolve_aliasing(a, dest, cleanups, True), rdims)
    b_b = tz.broadcast_to(_resolve_aliasing(b, dest, cleanups, True), rdims)

    plan = tz.canonicalize(dest, a_b, b_b)
    fn = kernels.binary_scalar_fn(op, compute, mode, _status)
    ctx = dtypes.CastContext(mode)
    store = _make_store(dest, mode, ctx)
    a_unpack, _ = dtypes.codec(a_b.dtype, a_b.byteorder)
    b_unpack, _ = dtypes.codec(b_b.dtype, b_b.byteorder)
    handle = dispatch.lookup(MODULE, device.type.name, op)

    _sync_other_streams(exec_stream, a_b, b_b)
    d_buf = dest.storage.view()
    a_buf = a_b.storage.view()
    b_buf = b_b.storage.view()
    bases = (dest.offset, a_b.offset, b_b.offset)

    def run():
        handle(plan, d_buf, store, a_buf, a_unpack, b_buf, b_unpack, fn, bases)
        ctx.flush()

    exec_stream.submit(run)
    _finish(exec_stream, cleanups)
    return dest


def add(a, b, dest=None, mode="standard"):
    return binary_elementwise("add", a, b, dest, mode)


def subtract(a, b, dest=None, mode="standard"):
    return binary_elementwise("subtract", a, b, dest, mode)


def multiply(a, b, dest=None, mode="standard"):
    return binary_elementwise("multiply", a, b, dest, mode)


def divide(a, b, dest=None, mode="standard"):
    return binary_elementwise("divide", a, b, dest, mode)


def minimum(a, b, dest=None, mode="standard"):
    return binary_elementwise("minimum", a, b, dest, mode)


def maximum(a, b, dest=None, mode="standard"):
    return binary_elementwise("maximum", a, b, dest, mode)


# ---------------------------------------------------------------------------
# Unary elementwise
# ---------------------------------------------------------------------------

def unary_elementwise(op: str, a, dest: Tensor | None = None,
                      mode: str = "standard") -> Tensor:
    if op not in kernels.UNARY_OPS:
        raise ValueError(f"unknown unary op {op!r}")
    mode = dtypes.check_mode(mode)
    a = as_operand(a)
    if isinstance(a, Scalar):
        a = tz.scalar_tensor(a, device=tz.default_device())
    device = a.device

    needs_float = op in FLOAT_DOMAIN_UNARY
    if needs_float and not a.dtype.is_float:
        if _strict():
            raise StrictModeError(
                f"{op} on {a.dtype.name} needs an implicit cast to floating "
                "point, but implicit casting is disabled")
        compute_dtype = dtypes.float_container(a.dtype)
    else:
        compute_dtype = a.dtype

    # content-sensitive mode handling on real floating data
    force_complex = False
    domain = kernels.unary_domain_predicate(op)
    if (domain is not None and mode != "standard"
            and not compute_dtype.is_complex):
        violated = any(domain(float(v)) for v in tz.read_values(a))
        if violated:
            if mode == "error":
                raise DomainError(
                    f"{op}: input outside the real domain in error mode")
            if mode == "warning":
                dtypes.emit_warning(f"{op}: input outside the real domain")
            if mode == "complex":
                force_complex = True

    rdtype = compute_dtype
    if force_complex:
        rdtype = dtypes.complex_counterpart(compute_dtype)
    if op == "absolute" and rdtype.is_complex:
        rdtype = dtypes.real_counterpart(rdtype)

    if dest is None:
        dest = tz.tensor_create(a.dims, rdtype, device)
    else:
        _check_dest(dest, a.dims, device, rdtype, mode)

    a = _prepare(a, device, compute_dtype, mode)

    exec_stream = dest.storage.stream
    cleanups: list = []
    a_r = _resolve_aliasing(a, dest, cleanups, True)

    plan = tz.canonicalize(dest, a_r)
    fn = kernels.unary_scalar_fn(op, dtypes.widen_for_compute(compute_dtype),
                                 _status, force_complex)
    ctx = dtypes.CastContext(mode)
    store = _make_store(dest, mode, ctx)
    a_unpack, _ = dtypes.codec(a_r.dtype, a_r.byteorder)
    handle = dispatch.lookup(MODULE, device.type.name, op)

    _sync_other_streams(exec_stream, a_r)
    d_buf = dest.storage.view()
    a_buf = a_r.storage.view()
    bases = (dest.offset, a_r.offset)

    def run():
        handle(plan, d_buf, store, a_buf, a_unpack, fn, bases)
        ctx.flush()

    exec_stream.submit(run)
    _finish(exec_stream, cleanups)
    return dest


def negate(a, dest=None, mode="standard"):
    return unary_elementwise("negate", a, dest, mode)


def absolute(a, dest=None, mode="standard"):
    return unary_elementwise("absolute", a, dest, mode)


def square_root(a, dest=None, mode="standard"):
    return unary_elementwise("square_root", a, dest, mode)


def exponential(a, dest=None, mode="standard"):
    return unary_elementwise("exponential", a, dest, mode)


def logarithm(a, dest=None, mode="standard"):
    return unary_elementwise("logarithm", a, dest, mode)


def sine(a, dest=None, mode="standard"):
    return unary_elementwise("sine", a, dest, mode)


def cosine(a, dest=None, mode="standard"):
    return unary_elementwise("cosine", a, dest, mode)


def arcsine(a, dest=None, mode="standard"):
    return unary_elementwise("arcsine", a, dest, mode)


def arccosine(a, dest=None, mode="standard"):
    return unary_elementwise("arccosine", a, dest, mode)


def conjugate(a, dest=None, mode="standard"):
    return unary_elementwise("conjugate", a, dest, mode)


# ---------------------------------------------------------------------------
# Reductions
# ---------------------------------------------------------------------------

def reduce(op: str, a, axes=None, dest: Tensor | None = None,
           mode: str = "standard", p: float = 2.0) -> Tensor:
    if op not in kernels.REDUCE_OPS:
        raise ValueError(f"unknown reduction {op!r}")
    mode = dtypes.check_mode(mode)
    a = as_operand(a)
    if isinstance(a, Scalar):
        a = tz.scalar_tensor(a, device=tz.default_device())
    device = a.device

    if axes is None:
        axes = tuple(range(a.ndim))
    else:
        axes = tuple(int(ax) for ax in axes)
        if len(set(axes)) != len(axes):
            raise ShapeError(f"duplicate reduction axes {axes}")
        for ax in axes:
            if not 0 <= ax < a.ndim:
                raise ShapeError(f"axis {ax} out of range for {a.ndim}-d tensor")

    src_dtype = a.dtype
    if op in ("any", "all"):
        if src_dtype is not dtypes.BOOL and _strict():
            raise StrictModeError(
                f"{op} on {src_dtype.name} needs an implicit cast to bool, "
                "but implicit casting is disabled")
        rdtype = dtypes.BOOL
    elif op == "norm":
        if src_dtype.is_float:
            rdtype = dtypes.real_counterpart(src_dtype)
        elif _strict():
            raise StrictModeError(
                "norm needs an implicit cast to floating point, but implicit "
                "casting is disabled")
        else:
            rdtype = dtypes.DOUBLE
    else:
        rdtype = src_dtype

    kept = [k for k in range(a.ndim) if k not in axes]
    rdims = tuple(a.dims[k] for k in kept)
    if dest is None:
        dest = tz.tensor_create(rdims, rdtype, device)
    else:
        _check_dest(dest, rdims, device, rdtype, mode)

    compute = dtypes.widen_for_compute(rdtype if op not in ("any", "all", "norm")
                                       else dtypes.widen_for_compute(src_dtype))
    init, step, fin = _reduction_acc(op, compute, src_dtype, p)

    exec_stream = dest.storage.stream
    cleanups: list = []
    a_r = _resolve_aliasing(a, dest, cleanups, False)

    outer = tz.build_plan(rdims, [dest.strides,
                                  tuple(a_r.strides[k] for k in kept)])
    inner = tz.build_plan(tuple(a_r.dims[k] for k in axes),
                          [tuple(a_r.strides[k] for k in axes)])

    ctx = dtypes.CastContext(mode)
    store = _make_store(dest, mode, ctx)
    a_unpack, _ = dtypes.codec(a_r.dtype, a_r.byteorder)
    handle = dispatch.lookup(MODULE, device.type.name, _reduce_table_name(op))

    _sync_other_streams(exec_stream, a_r)
    d_buf = dest.storage.view()
    a_buf = a_r.storage.view()
    bases = (dest.offset, a_r.offset)

    def run():
        handle(outer, inner, d_buf, store, a_buf, a_unpack, init, step, fin,
               bases)
        ctx.flush()

    exec_stream.submit(run)
    _finish(exec_stream, cleanups)
    return dest


def _reduce_table_name(op: str) -> str:
    if op in ("minimum", "maximum"):
        return f"reduce_{op}"
    return op


def _reduction_acc(op: str, compute: dtypes.DType, src: dtypes.DType, p: float):
    if op == "sum":
        return kernels.make_sum_acc(compute)
    if op == "product":
        return kernels.make_product_acc(compute)
    if op == "minimum":
        if compute.is_complex:
            key = lambda v: (v.real, v.imag)
            return (lambda: None, lambda acc, v:
                    v if acc is None or key(v) < key(acc) else acc,
                    lambda acc: acc)
        return (lambda: None,
                lambda acc, v: v if acc is None or v < acc else acc,
                lambda acc: acc)
    if op == "maximum":
        if compute.is_complex:
            key = lambda v: (v.real, v.imag)
            return (lambda: None, lambda acc, v:
                    v if acc is None or key(v) > key(acc) else acc,
                    lambda acc: acc)
        return (lambda: None,
                lambda acc, v: v if acc is None or v > acc else acc,
                lambda acc: acc)
    if op == "any":
        return (lambda: False, lambda acc, v: acc or v != 0, lambda acc: acc)
    if op == "all":
        return (lambda: True, lambda acc, v: acc and v != 0, lambda acc: acc)
    if op == "norm":
        if p <= 0:
            raise ValueError("norm order must be positive")
        init, step, fin = kernels.make_sum_acc(dtypes.DOUBLE)
        return (init,
                lambda acc, v: step(acc, abs(v) ** p),
                lambda acc: fin(acc) ** (1.0 / p))
    raise ValueError(op)


def frobenius_norm(a) -> float:
    """Full 2-norm of all elements as a host float."""
    return float(reduce("norm", a, p=2.0).item())


# ---------------------------------------------------------------------------
# Matrix products
# ---------------------------------------------------------------------------

def _as_matrix(t: Tensor) -> Tensor:
    """Vectors are column vectors: a 1-D length-n tensor acts as n x 1."""
    if t.ndim == 1:
        return tz.reshape(t, (t.dims[0], 1))
    if t.ndim == 2:
        return t
    raise ShapeError(f"matrix product needs 1-D or 2-D operands, got {t.ndim}-D")


def matmul(a, b, dest: Tensor | None = None, mode: str = "standard") -> Tensor:
    mode = dtypes.check_mode(mode)
    a = as_operand(a)
    b = as_operand(b)
    if not isinstance(a, Tensor) or not isinstance(b, Tensor):
        raise ShapeError("matrix product needs tensor operands")
    device = a.device
    am = _as_matrix(a)
    bm = _as_matrix(b)
    if am.dims[1] != bm.dims[0]:
        raise ShapeError(f"inner dimensions disagree: {am.dims} x {bm.dims}")
    m, k = am.dims
    n = bm.dims[1]

    if _strict():
        if a.device is not b.device:
            raise StrictModeError(
                "operand devices differ, and implicit casting is disabled")
        if a.dtype is not b.dtype:
            raise StrictModeError(
                "operand dtypes differ, and implicit casting is disabled")
    rdtype = dtypes.promote(am.dtype, bm.dtype)
    rdims = (m, n)
    if dest is None:
        dest = tz.tensor_create(rdims, rdtype, device)
    else:
        _check_dest(dest, rdims, device, rdtype, mode)

    am = _prepare(am, device, rdtype, mode)
    bm = _prepare(bm, device, rdtype, mode)

    exec_stream = dest.storage.stream
    cleanups: list = []
    # output cells are read-after-write hazards against any aliased input
    am = _resolve_aliasing(am, dest, cleanups, False)
    bm = _resolve_aliasing(bm, dest, cleanups, False)

    compute = dtypes.widen_for_compute(rdtype)
    init, step, fin = kernels.make_sum_acc(compute)
    if compute.is_integer or compute is dtypes.BOOL:
        mul = lambda x, y: int(x) * int(y)
    else:
        mul = lambda x, y: x * y
    ctx = dtypes.CastContext(mode)
    store = _make_store(dest, mode, ctx)
    a_unpack, _ = dtypes.codec(am.dtype, am.byteorder)
    b_unpack, _ = dtypes.codec(bm.dtype, bm.byteorder)
    handle = dispatch.lookup(MODULE, device.type.name, "matmul")

    _sync_other_streams(exec_stream, am, bm)
    d_buf = dest.storage.view()
    a_buf = am.storage.view()
    b_buf = bm.storage.view()
    d_base, a_base, b_base = dest.offset, am.offset, bm.offset
    d_str, a_str, b_str = dest.strides, am.strides, bm.strides

    def run():
        handle(d_buf, d_base, d_str, store, a_buf, a_base, a_str, a_unpack,
               b_buf, b_base, b_str, b_unpack, m, n, k, mul, init, step, fin)
        ctx.flush()

    exec_stream.submit(run)
    _finish(exec_stream, cleanups)
    return dest


def inner(u, v, mode: str = "standard") -> Scalar:
    """Inner product of two vectors, as a Scalar."""
    u = as_operand(u)
    v = as_operand(v)
    if not (isinstance(u, Tensor) and u.ndim == 1
            and isinstance(v, Tensor) and v.ndim == 1):
        raise ShapeError("inner product needs two 1-D tensors")
    out = matmul(tz.transpose(u), v, mode=mode)
    return tz.as_scalar(out)


def outer(u, v, dest=None, mode: str = "standard") -> Tensor:
    """Outer product u v^T of two vectors."""
    u = as_operand(u)
    v = as_operand(v)
    if not (isinstance(u, Tensor) and u.ndim == 1
            and isinstance(v, Tensor) and v.ndim == 1):
        raise ShapeError("outer product needs two 1-D tensors")
    return matmul(u, tz.transpose(v), dest=dest, mode=mode)


# ---------------------------------------------------------------------------
# Copy / cast / ensure
# ---------------------------------------------------------------------------

def _run_copy(src: Tensor, dst: Tensor, mode: str = "standard") -> None:
    """Value copy src -> dst (same dims), byte order and dtype aware."""
    exec_stream = dst.storage.stream
    src_b = tz.broadcast_to(src, dst.dims)
    plan = tz.canonicalize(dst, src_b)
    ctx = dtypes.CastContext(mode)
    store = _make_store(dst, mode, ctx)
    s_unpack, _ = dtypes.codec(src_b.dtype, src_b.byteorder)
    handle = dispatch.lookup(MODULE, dst.device.type.name, "copy")
    _sync_other_streams(exec_stream, src_b)
    d_buf = dst.storage.view()
    s_buf = src_b.storage.view()
    bases = (dst.offset, src_b.offset)
    identity = lambda v: v

    def run():
        handle(plan, d_buf, store, s_buf, s_unpack, identity, bases)
        ctx.flush()

    exec_stream.submit(run)


def copy(src, dst: Tensor, mode: str = "standard") -> None:
    """Copy (with broadcast and conversion) into an existing tensor."""
    mode = dtypes.check_mode(mode)
    src = as_operand(src)
    if not isinstance(dst, Tensor):
        raise ShapeError("copy destination must be a tensor")
    if dst.readonly:
        raise ReadOnlyError("copy destination is read-only")
    if isinstance(src, Scalar):
        fill(dst, src, mode)
        return
    tz.broadcast_dims(src.dims, dst.dims)
    if _strict():
        if src.device is not dst.device:
            raise StrictModeError(
                "cross-device copy needs implicit casting, which is disabled")
        if src.dtype is not dst.dtype:
            raise StrictModeError(
                "dtype-converting copy needs implicit casting, which is disabled")
    cleanups: list = []
    src = _resolve_aliasing(src, dst, cleanups, False)
    _run_copy(src, dst, mode)
    _finish(dst.storage.stream, cleanups)


def cast(t, dtype: dtypes.DType | None = None,
         device: devices.Device | None = None, mode: str = "standard") -> Tensor:
    """Explicit conversion; always returns a fresh tensor."""
    t = as_operand(t)
    if isinstance(t, Scalar):
        return tz.scalar_tensor(dtypes.cast_scalar(t.value, dtype or t.dtype, mode),
                                dtype or t.dtype, device)
    dtype = dtype or t.dtype
    device = device or t.device
    out = tz.tensor_create(t.dims, dtype, device)
    _run_copy(t, out, mode)
    return out


def ensure(t, dtype: dtypes.DType | None = None,
           device: devices.Device | None = None, mode: str = "standard"):
    """Convert only when the requested dtype/device differ; else the input."""
    t = as_operand(t)
    if isinstance(t, Tensor):
        want_dtype = dtype or t.dtype
        want_device = device or t.device
        if t.dtype is want_dtype and t.device is want_device:
            return t
    return cast(t, dtype, device, mode)


# ---------------------------------------------------------------------------
# Constructors and fills
# ---------------------------------------------------------------------------

def fill(t: Tensor, value, mode: str = "standard") -> None:
    if not isinstance(t, Tensor):
        raise ShapeError("fill target must be a tensor")
    if t.readonly:
        raise ReadOnlyError("fill target is read-only")
    if isinstance(value, Scalar):
        value = value.value
    cast_value = dtypes.cast_scalar(value, t.dtype, mode)
    _, pack = dtypes.codec(t.dtype, t.byteorder)
    plan = tz.canonicalize(t)
    handle = dispatch.lookup(MODULE, t.device.type.name, "fill")
    buf = t.storage.view()
    base = t.offset
    t.storage.stream.submit(lambda: handle(plan, buf, pack, cast_value, base))


def zeros(dims, dtype=None, device=None) -> Tensor:
    t = tz.tensor_create(dims, dtype, device)
    fill(t, 0)
    return t


def ones(dims, dtype=None, device=None) -> Tensor:
    t = tz.tensor_create(dims, dtype, device)
    fill(t, 1)
    return t


def arange(n: int, dtype=None, device=None) -> Tensor:
    """0..n-1 along the storage linear order."""
    t = tz.tensor_create((int(n),), dtype, device)
    _, pack = dtypes.codec(t.dtype, t.byteorder)
    plan = tz.canonicalize(t)
    handle = dispatch.lookup(MODULE, t.device.type.name, "arange")
    to = t.dtype
    cast_fn = lambda v: dtypes.cast_scalar(v, to)
    buf = t.storage.view()
    base = t.offset
    t.storage.stream.submit(lambda: handle(plan, buf, pack, cast_fn, base))
    return t


def identity(n: int, dtype=None, device=None) -> Tensor:
    t = zeros((int(n), int(n)), dtype, device)
    fill(tz.diag_view(t), 1)
    return t


# ---------------------------------------------------------------------------
# Comparison helper
# ---------------------------------------------------------------------------

def _values_equal(x, y) -> bool:
    if isinstance(x, complex) or isinstance(y, complex):
        cx, cy = complex(x), complex(y)
        return (_values_equal(cx.real, cy.real)
                and _values_equal(cx.imag, cy.imag))
    if isinstance(x, float) and isinstance(y, float):
        if math.isnan(x) and math.isnan(y):
            return True
        return x == y
    return x == y


def array_equal(a, b) -> bool:
    """Elementwise value equality (NaNs compare equal); dims must match."""
    a = as_operand(a)
    b = as_operand(b)
    if isinstance(a, Scalar) or isinstance(b, Scalar):
        if isinstance(a, Scalar) and isinstance(b, Scalar):
            return _values_equal(a.value, b.value)
        t, s = (a, b) if isinstance(a, Tensor) else (b, a)
        return t.nelem == 1 and _values_equal(t.item(), s.value)
    if a.dims != b.dims:
        return False
    return all(_values_equal(x, y)
               for x, y in zip(tz.read_values(a), tz.read_values(b)))
