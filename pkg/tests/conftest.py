"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the library's own plans, binding, and
dispatch machinery: they enumerate index tuples, compute byte offsets from
first principles, and decode elements with fresh struct codecs, so an
implementation bug cannot cancel out of both sides of an assertion.
"""

import math
import random
import struct

import pytest

import tidepool as tp
from tidepool import devices, dtypes
from tidepool import tensors as tz


@pytest.fixture(autouse=True)
def _restore_globals():
    """Keep cast policy, warning handler, and device registry test-local."""
    policy = dtypes.implicit_casting()
    yield
    dtypes.set_implicit_casting(policy)
    dtypes.set_warning_handler(None)
    if len(devices.list_devices()) != 3:
        devices.configure(2)


def index_tuples(dims):
    """All index tuples in column-major (first axis fastest) order."""
    if not dims:
        return [()]
    out = []
    idx = [0] * len(dims)
    for _ in range(math.prod(dims)):
        out.append(tuple(idx))
        for k in range(len(dims)):
            idx[k] += 1
            if idx[k] < dims[k]:
                break
            idx[k] = 0
    return out


def element_offset(t, idx):
    return t.offset + sum(i * s for i, s in zip(idx, t.strides))


_FMT = {"bool": "?", "int8": "b", "uint8": "B", "int16": "h", "uint16": "H",
        "int32": "i", "uint32": "I", "int64": "q", "uint64": "Q",
        "half": "e", "float": "f", "double": "d"}


def raw_read(t, idx):
    """Decode one element straight from the buffer with a fresh codec."""
    off = element_offset(t, idx)
    t.storage.stream.sync()
    buf = bytes(t.storage.view()[off:off + t.dtype.size])
    prefix = "<" if t.byteorder == "little" else ">"
    if t.dtype.is_complex:
        fmt = prefix + _FMT[t.dtype.name.split("-")[1]] * 2
        re_, im = struct.unpack(fmt, buf)
        return complex(re_, im)
    return struct.unpack(prefix + _FMT[t.dtype.name], buf)[0]


def raw_write(t, idx, value):
    off = element_offset(t, idx)
    t.storage.stream.sync()
    prefix = "<" if t.byteorder == "little" else ">"
    if t.dtype.is_complex:
        fmt = prefix + _FMT[t.dtype.name.split("-")[1]] * 2
        t.storage.view()[off:off + t.dtype.size] = struct.pack(
            fmt, value.real, value.imag)
    else:
        t.storage.view()[off:off + t.dtype.size] = struct.pack(
            prefix + _FMT[t.dtype.name], value)


def values_by_index(t):
    return {idx: raw_read(t, idx) for idx in index_tuples(t.dims)}


def equal_values(x, y) -> bool:
    if isinstance(x, complex) or isinstance(y, complex):
        cx, cy = complex(x), complex(y)
        return equal_values(cx.real, cy.real) and equal_values(cx.imag, cy.imag)
    if isinstance(x, float) and isinstance(y, float):
        return (math.isnan(x) and math.isnan(y)) or x == y
    return x == y


def fill_sequential(t, start=0):
    """Deterministic distinct values cast into the tensor's dtype."""
    for n, idx in enumerate(index_tuples(t.dims), start):
        raw_write(t, idx, dtypes.cast_scalar(n, t.dtype))


def fill_random(t, rng):
    for idx in index_tuples(t.dims):
        raw_write(t, idx, random_value(rng, t.dtype))


def random_value(rng, d):
    if d is dtypes.BOOL:
        return rng.random() < 0.5
    if d.is_complex:
        return complex(round(rng.uniform(-8, 8), 3), round(rng.uniform(-8, 8), 3))
    if d.is_float:
        return dtypes.cast_scalar(round(rng.uniform(-8, 8), 3), d)
    lo, hi = dtypes.int_range(d)
    return rng.randint(max(lo, -100), min(hi, 100))


def random_dims(rng, max_axes=4, max_extent=5, allow_zero=False):
    ndim = rng.randint(0, max_axes)
    low = 0 if allow_zero else 1
    return tuple(rng.randint(low, max_extent) for _ in range(ndim))


def random_view(rng, base):
    """Random basic view: slices on each axis, then a random permutation."""
    parts = []
    for d in base.dims:
        choice = rng.random()
        if choice < 0.25 and d > 0:
            start = rng.randrange(d)
            parts.append(slice(start, start + 1))
        elif choice < 0.6:
            step = rng.choice([1, 1, 2, -1, -2])
            if step > 0:
                start = rng.randint(0, max(0, d - 1))
                stop = rng.randint(start, d)
                parts.append(slice(start, stop, step))
            else:
                parts.append(slice(None, None, step))
        else:
            parts.append(slice(None))
    view = tp.apply_index(base, tuple(parts))
    if view.ndim > 1 and rng.random() < 0.5:
        order = list(range(view.ndim))
        rng.shuffle(order)
        view = tp.permute_axes(view, order)
    return view


def random_strided_tensor(rng, dtype=None, device=None, max_axes=4,
                          max_extent=5):
    dtype = dtype or rng.choice(dtypes.ALL_DTYPES)
    base = tp.tensor_create(random_dims(rng, max_axes, max_extent),
                            dtype, device)
    fill_random(base, rng)
    return random_view(rng, base)


# ---------------------------------------------------------------------------
# Promotion oracle: probe values + struct round-trips
# ---------------------------------------------------------------------------

def _float_probes(name):
    if name == "half":
        return [0.5, 1.0 + 2.0 ** -10, 65504.0, 2.0 ** -24, -2048.0,
                math.inf, -math.inf]
    if name == "float":
        return [0.5, 1.0 + 2.0 ** -23, 3.4028234663852886e38, 2.0 ** -149,
                -16777216.0, math.inf, -math.inf]
    return [0.5, 1.0 + 2.0 ** -52, 1.7976931348623157e308, 5e-324,
            -9007199254740992.0, math.inf, -math.inf]


def dtype_probes(d):
    """Values that witness the dtype's range and precision."""
    if d.name == "bool":
        return [False, True]
    if d.is_complex:
        comp = d.name.split("-")[1]
        return ([complex(v, 0) for v in _float_probes(comp)]
                + [complex(0, v) for v in _float_probes(comp)])
    if d.is_float:
        return _float_probes(d.name)
    lo, hi = dtypes.int_range(d)
    probes = [lo, hi, 0, 1, hi - 1]
    if lo < 0:
        probes.append(-1)
    return probes


def _exact_eq(out, value) -> bool:
    """Exact numeric equality; Python compares float to int without rounding."""
    if isinstance(out, float) and math.isnan(out):
        return isinstance(value, float) and math.isnan(value)
    if isinstance(value, float) and math.isnan(value):
        return False
    return out == value


def roundtrips(value, d) -> bool:
    """True when the VALUE survives storage in dtype ``d`` exactly."""
    if d.is_complex:
        fmt = "<" + _FMT[d.name.split("-")[1]] * 2
        cv = complex(value)
        try:
            packed = struct.pack(fmt, cv.real, cv.imag)
        except (struct.error, OverflowError):
            return False
        re_, im = struct.unpack(fmt, packed)
        if isinstance(value, complex):
            return _exact_eq(re_, value.real) and _exact_eq(im, value.imag)
        return _exact_eq(re_, value) and im == 0.0
    if isinstance(value, complex):
        return False
    fmt = "<" + _FMT[d.name]
    if d.name in ("half", "float", "double"):
        try:
            packed = struct.pack(fmt, float(value))
        except (struct.error, OverflowError):
            return False
        return _exact_eq(struct.unpack(fmt, packed)[0], value)
    # integer and bool targets hold only finite integral values
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value) or not value.is_integer():
            return False
        value = int(value)
    try:
        packed = struct.pack(fmt, value)
    except (struct.error, OverflowError):
        return False
    return _exact_eq(struct.unpack(fmt, packed)[0], value)


def oracle_contains(c, a) -> bool:
    return all(roundtrips(v, c) for v in dtype_probes(a))


# candidate order: size, then bool < signed < unsigned < float < complex
_KIND_RANK = {"bool": 0, "int8": 1, "int16": 1, "int32": 1, "int64": 1,
              "uint8": 2, "uint16": 2, "uint32": 2, "uint64": 2,
              "half": 3, "float": 3, "double": 3,
              "complex-half": 4, "complex-float": 4, "complex-double": 4}

_ORDER = sorted(dtypes.ALL_DTYPES,
                key=lambda d: (d.size, _KIND_RANK[d.name], d.wire_code))


def oracle_promote(a, b):
    for c in _ORDER:
        if oracle_contains(c, a) and oracle_contains(c, b):
            return c
    if a.is_complex or b.is_complex:
        return dtypes.CDOUBLE
    return dtypes.DOUBLE


# ---------------------------------------------------------------------------
# Indexing oracle
# ---------------------------------------------------------------------------

def oracle_selection(dims, parts):
    """Independent resolution of an index expression.

    Returns (fixed scalar index per consumed dim or None, per-result-axis
    lists of per-dim index tuples, result dims).  Ranges resolve through
    CPython's own slice semantics.
    """
    parts = list(parts)
    consumed = 0
    for p in parts:
        if p is Ellipsis:
            continue
        if isinstance(p, int) or isinstance(p, slice):
            consumed += 1
        elif isinstance(p, tp.Tensor) and p.dtype is dtypes.BOOL:
            consumed += p.ndim
        elif isinstance(p, tp.Tensor):
            consumed += 1 if p.ndim == 1 else p.dims[1]
        else:
            raise AssertionError(f"oracle cannot handle {p!r}")
    pad = len(dims) - consumed
    expanded = []
    saw_ellipsis = False
    for p in parts:
        if p is Ellipsis:
            expanded.extend([slice(None)] * pad)
            saw_ellipsis = True
        else:
            expanded.append(p)
    if not saw_ellipsis:
        expanded.extend([slice(None)] * pad)

    axes = []  # per result axis: list of tuples (dim position, index) groups
    base_fix = {}
    pos = 0
    for p in expanded:
        if isinstance(p, int):
            i = p + dims[pos] if p < 0 else p
            assert 0 <= i < dims[pos]
            base_fix[pos] = i
            pos += 1
        elif isinstance(p, slice):
            sel = list(range(dims[pos]))[p]
            axes.append([((pos, i),) for i in sel])
            pos += 1
        elif isinstance(p, tp.Tensor) and p.dtype is dtypes.BOOL:
            rank = p.ndim
            assert p.dims == tuple(dims[pos:pos + rank])
            rows = []
            for idx in index_tuples(p.dims):
                if raw_read(p, idx):
                    rows.append(tuple((pos + j, i) for j, i in enumerate(idx)))
            axes.append(rows)
            pos += rank
        else:  # integer index array
            if p.ndim == 1:
                rows = []
                for (r,) in index_tuples(p.dims):
                    i = int(raw_read(p, (r,)))
                    i = i + dims[pos] if i < 0 else i
                    assert 0 <= i < dims[pos]
                    rows.append(((pos, i),))
                axes.append(rows)
                pos += 1
            else:
                m, w = p.dims
                rows = []
                for r in range(m):
                    row = []
                    for j in range(w):
                        i = int(raw_read(p, (r, j)))
                        i = i + dims[pos + j] if i < 0 else i
                        assert 0 <= i < dims[pos + j]
                        row.append((pos + j, i))
                    rows.append(tuple(row))
                axes.append(rows)
                pos += w
    result_dims = tuple(len(a) for a in axes)
    return base_fix, axes, result_dims


def oracle_gather(t, parts):
    """Expected (result_dims, {result idx: value}) for apply_index."""
    base_fix, axes, result_dims = oracle_selection(t.dims, parts)
    out = {}
    for ridx in index_tuples(result_dims):
        src = dict(base_fix)
        for axis, r in zip(axes, ridx):
            for pos, i in axis[r]:
                src[pos] = i
        full = tuple(src[k] for k in range(t.ndim))
        out[ridx] = raw_read(t, full)
    return result_dims, out
