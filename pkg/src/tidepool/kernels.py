"""Foundation kernels: strided loops over raw buffers.

Everything in this module works on plain buffers, byte offsets, and
iteration plans; nothing depends on the tensor object layer, so the loops
are usable (and testable) stand-alone.  The object-layer pipeline prepares
plans, codecs, and scalar functions and then calls these through the
per-device function tables.
"""

from __future__ import annotations

import cmath
import math

from . import dtypes
from .errors import DomainError

# ---------------------------------------------------------------------------
# Scalar function factories
# ---------------------------------------------------------------------------

STATUS_DOMAIN = "domain-violation"
STATUS_INT_DIV_ZERO = "integer-division-by-zero"

BINARY_OPS = ("add", "subtract", "multiply", "divide", "minimum", "maximum")
UNARY_OPS = ("negate", "absolute", "square_root", "exponential", "logarithm",
             "sine", "cosine", "arcsine", "arccosine", "conjugate")
REDUCE_OPS = ("sum", "product", "minimum", "maximum", "any", "all", "norm")


def _trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def _float_div(a: float, b: float) -> float:
    if b == 0.0:
        if a == 0.0 or math.isnan(a):
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)
    return a / b


def _complex_div(a: complex, b: complex) -> complex:
    if b == 0:
        return complex(math.nan, math.nan)
    return a / b


def binary_scalar_fn(op: str, compute: dtypes.DType, mode: str, status: set):
    """Scalar function for one binary op at the given compute dtype."""
    if op == "add":
        return lambda a, b: a + b
    if op == "subtract":
        return lambda a, b: a - b
    if op == "multiply":
        return lambda a, b: a * b
    if op == "minimum":
        if compute.is_complex:
            return lambda a, b: a if (a.real, a.imag) <= (b.real, b.imag) else b
        return lambda a, b: a if a <= b else b
    if op == "maximum":
        if compute.is_complex:
            return lambda a, b: a if (a.real, a.imag) >= (b.real, b.imag) else b
        return lambda a, b: a if a >= b else b
    if op == "divide":
        if compute.is_complex:
            return _complex_div
        if compute.is_float:
            return _float_div

        def int_div(a, b):
            if b == 0:
                status.add(STATUS_INT_DIV_ZERO)
                if mode == "error":
                    raise DomainError("integer division by zero")
                return 0
            return _trunc_div(int(a), int(b))

        return int_div
    raise ValueError(f"unknown binary op {op!r}")


# (domain predicate on real values, real fn, complex fn) per unary op;
# predicate None means the whole real line is in domain.
def _sqrt_real(v):
    if v < 0.0:
        return math.nan
    return math.sqrt(v)


def _log_real(v):
    if v < 0.0:
        return math.nan
    if v == 0.0:
        return -math.inf
    return math.log(v)


def _log_complex(v):
    if v == 0:
        return complex(-math.inf, 0.0)
    return cmath.log(v)


def _exp_real(v):
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


def _guard_nan(fn):
    def run(v):
        if math.isnan(v):
            return math.nan
        return fn(v)
    return run


UNARY_TABLE = {
    # op: (real domain predicate, real fn, complex fn)
    "negate": (None, lambda v: -v, lambda v: -v),
    "absolute": (None, abs, abs),
    "square_root": (lambda v: v < 0.0, _guard_nan(_sqrt_real), cmath.sqrt),
    "exponential": (None, _guard_nan(_exp_real), cmath.exp),
    "logarithm": (lambda v: v < 0.0, _guard_nan(_log_real), _log_complex),
    "sine": (None, _guard_nan(math.sin), cmath.sin),
    "cosine": (None, _guard_nan(math.cos), cmath.cos),
    "arcsine": (lambda v: abs(v) > 1.0,
                _guard_nan(lambda v: math.asin(v) if abs(v) <= 1.0 else math.nan),
                cmath.asin),
    "arccosine": (lambda v: abs(v) > 1.0,
                  _guard_nan(lambda v: math.acos(v) if abs(v) <= 1.0 else math.nan),
                  cmath.acos),
    "conjugate": (None, lambda v: v,
                  lambda v: v.conjugate() if isinstance(v, complex) else v),
}


def unary_scalar_fn(op: str, compute: dtypes.DType, status: set,
                    force_complex: bool = False):
    """Scalar function for one unary op; records domain flags on NaN results."""
    domain, real_fn, complex_fn = UNARY_TABLE[op]
    if compute.is_complex or force_complex:
        return lambda v: complex_fn(complex(v))
    if compute.is_float:
        if domain is None:
            return real_fn

        def run(v):
            if domain(v):
                status.add(STATUS_DOMAIN)
            return real_fn(v)

        return run
    # integer compute types reach only negate/absolute/conjugate
    return real_fn


def unary_domain_predicate(op: str):
    return UNARY_TABLE[op][0]


# ---------------------------------------------------------------------------
# Accumulators (compensated where drift matters)
# ---------------------------------------------------------------------------

def make_sum_acc(compute: dtypes.DType):
    """(init, step, finalize) accumulating exactly (ints) or compensated."""
    if compute.is_complex:
        def init():
            return (0.0, 0.0, 0.0, 0.0)  # re sum/comp, im sum/comp

        def step(acc, v):
            rs, rc, is_, ic = acc
            rs, rc = _neumaier_step(rs, rc, v.real)
            is_, ic = _neumaier_step(is_, ic, v.imag)
            return (rs, rc, is_, ic)

        def fin(acc):
            return complex(acc[0] + acc[1], acc[2] + acc[3])

        return init, step, fin
    if compute.is_float:
        return (lambda: (0.0, 0.0),
                lambda acc, v: _neumaier_step(acc[0], acc[1], v),
                lambda acc: acc[0] + acc[1])
    return (lambda: 0, lambda acc, v: acc + int(v), lambda acc: acc)


def _neumaier_step(s: float, c: float, v: float):
    t = s + v
    if abs(s) >= abs(v):
        c += (s - t) + v
    else:
        c += (v - t) + s
    return t, c


def make_product_acc(compute: dtypes.DType):
    if compute.is_complex:
        return (lambda: complex(1, 0), lambda acc, v: acc * v, lambda acc: acc)
    if compute.is_float:
        return (lambda: 1.0, lambda acc, v: acc * v, lambda acc: acc)
    return (lambda: 1, lambda acc, v: acc * int(v), lambda acc: acc)


# ---------------------------------------------------------------------------
# Strided loops
# ---------------------------------------------------------------------------

def binary_elementwise(plan, d_buf, store, a_buf, a_unpack, b_buf, b_unpack,
                       fn, bases):
    # merged single-axis plans (the common case after canonicalization) run
    # as a tight loop with incremental offsets
    if len(plan.extents) == 1:
        d_off, a_off, b_off = bases
        ds = plan.strides[0][0]
        as_ = plan.strides[1][0]
        bs = plan.strides[2][0]
        for _ in range(plan.extents[0]):
            store(d_buf, d_off, fn(a_unpack(a_buf, a_off),
                                   b_unpack(b_buf, b_off)))
            d_off += ds
            a_off += as_
            b_off += bs
        return
    if plan.total == 0:
        return
    ext = plan.extents
    dstr, astr, bstr = plan.strides
    n_ax = len(ext)
    idx = [0] * n_ax
    d_off, a_off, b_off = bases
    for _ in range(plan.total):
        store(d_buf, d_off, fn(a_unpack(a_buf, a_off), b_unpack(b_buf, b_off)))
        for k in range(n_ax):
            idx[k] += 1
            d_off += dstr[k]
            a_off += astr[k]
            b_off += bstr[k]
            if idx[k] < ext[k]:
                break
            idx[k] = 0
            d_off -= dstr[k] * ext[k]
            a_off -= astr[k] * ext[k]
            b_off -= bstr[k] * ext[k]


def binary_elementwise_naive(dims, d_buf, d_base, d_strides, store,
                             a_buf, a_base, a_strides, a_unpack,
                             b_buf, b_base, b_strides, b_unpack, fn):
    """Reference loop with per-element index arithmetic (bench baseline)."""
    total = math.prod(dims)
    n = len(dims)
    idx = [0] * n
    for _ in range(total):
        d_off = d_base
        a_off = a_base
        b_off = b_base
        for k in range(n):
            i = idx[k]
            d_off += i * d_strides[k]
            a_off += i * a_strides[k]
            b_off += i * b_strides[k]
        store(d_buf, d_off, fn(a_unpack(a_buf, a_off), b_unpack(b_buf, b_off)))
        for k in range(n):
            idx[k] += 1
            if idx[k] < dims[k]:
                break
            idx[k] = 0


def unary_elementwise(plan, d_buf, store, a_buf, a_unpack, fn, bases):
    if len(plan.extents) == 1:
        d_off, a_off = bases
        ds = plan.strides[0][0]
        as_ = plan.strides[1][0]
        for _ in range(plan.extents[0]):
            store(d_buf, d_off, fn(a_unpack(a_buf, a_off)))
            d_off += ds
            a_off += as_
        return
    if plan.total == 0:
        return
    ext = plan.extents
    dstr, astr = plan.strides
    n_ax = len(ext)
    idx = [0] * n_ax
    d_off, a_off = bases
    for _ in range(plan.total):
        store(d_buf, d_off, fn(a_unpack(a_buf, a_off)))
        for k in range(n_ax):
            idx[k] += 1
            d_off += dstr[k]
            a_off += astr[k]
            if idx[k] < ext[k]:
                break
            idx[k] = 0
            d_off -= dstr[k] * ext[k]
            a_off -= astr[k] * ext[k]


def reduce_strided(outer_plan, inner_plan, d_buf, store,
                   a_buf, a_unpack, init, step, fin, bases):
    """Outer plan walks (dest, src-base); inner plan walks reduced axes."""
    inner_fast = len(inner_plan.extents) == 1
    for d_off, a_off in outer_plan.offsets(bases):
        acc = init()
        if inner_fast:
            s_off = a_off
            stride = inner_plan.strides[0][0]
            for _ in range(inner_plan.extents[0]):
                acc = step(acc, a_unpack(a_buf, s_off))
                s_off += stride
        else:
            for (s_off,) in inner_plan.offsets((a_off,)):
                acc = step(acc, a_unpack(a_buf, s_off))
        store(d_buf, d_off, fin(acc))


def matmul(d_buf, d_base, d_strides, store,
           a_buf, a_base, a_strides, a_unpack,
           b_buf, b_base, b_strides, b_unpack,
           m, n, k, mul, init, step, fin):
    ars, acs = a_strides
    brs, bcs = b_strides
    drs, dcs = d_strides
    for j in range(n):
        for i in range(m):
            acc = init()
            a_off = a_base + i * ars
            b_off = b_base + j * bcs
            for _ in range(k):
                acc = step(acc, mul(a_unpack(a_buf, a_off),
                                    b_unpack(b_buf, b_off)))
                a_off += acs
                b_off += brs
            store(d_buf, d_base + i * drs + j * dcs, fin(acc))


def fill(plan, d_buf, pack, value, base):
    if len(plan.extents) == 1:
        off = base
        step = plan.strides[0][0]
        for _ in range(plan.extents[0]):
            pack(d_buf, off, value)
            off += step
        return
    for (off,) in plan.offsets((base,)):
        pack(d_buf, off, value)


def byteswap_inplace(buf, base, plan, dtype):
    for (off,) in plan.offsets((base,)):
        dtypes.swap_element(buf, off, dtype)


def gather(dst_buf, src_buf, pairs, size):
    """Byte-exact element moves: (dst_off, src_off) pairs."""
    for d, s in pairs:
        dst_buf[d:d + size] = src_buf[s:s + size]


def scatter(pairs, d_buf, store, s_buf, s_unpack):
    """Value moves with conversion: (dst_off, src_off) pairs."""
    for d_off, s_off in pairs:
        store(d_buf, d_off, s_unpack(s_buf, s_off))


def scatter_fill(offsets, d_buf, pack, value):
    for off in offsets:
        pack(d_buf, off, value)


def arange_fill(plan, d_buf, pack, cast, base):
    value = 0
    for (off,) in plan.offsets((base,)):
        pack(d_buf, off, cast(value))
        value += 1


KERNEL_TABLE = {
    "binary_elementwise": binary_elementwise,
    "unary_elementwise": unary_elementwise,
    "reduce": reduce_strided,
    "matmul": matmul,
    "fill": fill,
    "arange": arange_fill,
    "byteswap": byteswap_inplace,
    "gather": gather,
    "scatter": scatter,
    "scatter_fill": scatter_fill,
}
