"""Command-line driver: device info, the QR demo, benchmarks, and OTP1 tools.

Exit codes: 0 success, 1 library error, 2 usage error, 3 I/O error,
4 malformed input file.
"""

from __future__ import annotations

import argparse
import math
import sys
import time

from . import devices, dispatch, dtypes, interop, kernels, ops
from . import tensors as tz
from .errors import FormatError, TidepoolError
from .indexing import apply_index, assign_index
from .tensors import transpose

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_FORMAT = 4


# ---------------------------------------------------------------------------
# info
# ---------------------------------------------------------------------------

def cmd_info() -> str:
    lines = ["devices:"]
    for dev in devices.list_devices():
        lines.append(f"  {dev.name}:")
        for key, value in sorted(dev.properties.items()):
            lines.append(f"    {key}: {value}")
        lines.append(f"    buffer-config: count={dev.buffer_count} "
                     f"max-bytes={dev.buffer_max_bytes}")
        modules = dispatch.loaded_modules(dev.type.name)
        lines.append(f"    modules: {', '.join(modules) if modules else '(none)'}")
        for module in modules:
            stats = dispatch.table_stats(module, dev.type.name)
            total = sum(stats.values())
            lines.append(f"      {module}: {len(stats)} ops, {total} calls")
            for op, count in sorted(stats.items()):
                if count:
                    lines.append(f"        {op}: {count} calls")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# QR demo
# ---------------------------------------------------------------------------

def build_demo_matrix(device=None) -> tz.Tensor:
    """5x5 rank-boosted ramp: 0..24 column-major plus the identity."""
    vec = ops.arange(25, dtypes.DOUBLE, device or devices.cpu())
    a = tz.reshape(vec, (5, 5))
    d = tz.diag_view(a)
    ops.add(d, 1, dest=d)
    return a


def qr_in_place_column(q_mat: tz.Tensor, r_mat: tz.Tensor) -> None:
    """Modified Gram-Schmidt, updating the remaining columns one at a time.

    ``q_mat`` starts as the input matrix and is overwritten with the
    orthonormal factor; ``r_mat`` is pre-allocated (any dtype/device) and
    receives the triangular factor.  Coefficients are read back from
    ``r_mat``, so its precision shapes the update exactly as stored.
    """
    ops.fill(r_mat, 0)
    n = q_mat.dims[1]
    for i in range(n):
        q = apply_index(q_mat, (slice(None), i))
        assign_index(r_mat, (i, i), math.sqrt(ops.inner(q, q).value))
        nrm = apply_index(r_mat, (i, i)).item()
        ops.divide(q, nrm, dest=q)
        for j in range(i + 1, n):
            v = apply_index(q_mat, (slice(None), j))
            assign_index(r_mat, (i, j), ops.inner(q, v).value)
            rij = apply_index(r_mat, (i, j)).item()
            ops.subtract(v, ops.multiply(q, rij), dest=v)


def qr_in_place_rank1(q_mat: tz.Tensor, r_mat: tz.Tensor) -> None:
    """Modified Gram-Schmidt using one rank-one update per pivot column."""
    ops.fill(r_mat, 0)
    n = q_mat.dims[1]
    for i in range(n):
        q = apply_index(q_mat, (slice(None), i))
        assign_index(r_mat, (i, i), math.sqrt(ops.inner(q, q).value))
        nrm = apply_index(r_mat, (i, i)).item()
        ops.divide(q, nrm, dest=q)
        if i + 1 < n:
            rest = apply_index(q_mat, (slice(None), slice(i + 1, n)))
            r_block = ops.matmul(transpose(q), rest)
            assign_index(r_mat, (i, slice(i + 1, n)),
                         tz.reshape(r_block, (n - i - 1,)))
            r_row = apply_index(r_mat, (i, slice(i + 1, n)))
            ops.subtract(rest, ops.outer(q, r_row), dest=rest)


QR_VARIANTS = {"column": qr_in_place_column, "rank1": qr_in_place_rank1}


def run_qr(variant: str = "column",
           dtype_q: dtypes.DType = dtypes.DOUBLE,
           dtype_r: dtypes.DType = dtypes.DOUBLE,
           device_q: devices.Device | None = None,
           device_r: devices.Device | None = None,
           byteswap_q: bool = False):
    """Run the demo factorization; returns (Q, R, ortho_norm, resid_norm)."""
    device_q = device_q or devices.cpu()
    device_r = device_r or devices.cpu()
    a = build_demo_matrix()
    q_mat = ops.cast(a, dtype=dtype_q, device=device_q)
    if byteswap_q:
        tz.byteswap(q_mat)
    r_mat = tz.tensor_create((5, 5), dtype_r, device_r)

    QR_VARIANTS[variant](q_mat, r_mat)

    qtq = ops.matmul(transpose(q_mat), q_mat)
    ortho = ops.frobenius_norm(ops.subtract(qtq, ops.identity(5)))
    resid = ops.frobenius_norm(ops.subtract(ops.matmul(q_mat, r_mat), a))
    return q_mat, r_mat, ortho, resid


def cmd_qr(variant, dtype_q, dtype_r, device_q, device_r, byteswap_q) -> str:
    q_mat, r_mat, ortho, resid = run_qr(variant, dtype_q, dtype_r,
                                        device_q, device_r, byteswap_q)
    return "\n".join([
        f"in-place QR factorization ({variant} variant)",
        "Q =",
        tz.render(q_mat),
        "R =",
        tz.render(r_mat),
        f"||Q^T Q - I||_F = {ortho:.6e}",
        f"||Q R - A||_F   = {resid:.6e}",
    ])


# ---------------------------------------------------------------------------
# convert / print
# ---------------------------------------------------------------------------

def cmd_convert(in_path: str, out_path: str, dtype: dtypes.DType | None,
                byteorder: str | None, mode: str = "standard") -> str:
    t = interop.load_otp1(in_path)
    if dtype is not None and dtype is not t.dtype:
        t = ops.cast(t, dtype=dtype, mode=mode)
    if byteorder is not None and byteorder != t.byteorder:
        tz.byteswap(t)
    interop.save_otp1(t, out_path)
    return (f"wrote {out_path}: dims {'x'.join(map(str, t.dims)) or 'scalar'}, "
            f"dtype {t.dtype.name}, {t.byteorder}-endian")


def cmd_print(in_path: str) -> str:
    return tz.render(interop.load_otp1(in_path))


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def cmd_bench(size: int = 192, reps: int = 3, seed: int = 20260808) -> str:
    """Time canonical-plan iteration against a naive nested loop.

    The second operand is a transposed view, so the naive loop pays the full
    index-arithmetic cost while the canonical plan sorts and merges axes.
    """
    import random
    rng = random.Random(seed)
    n = int(size)
    a = tz.tensor_create((n, n), dtypes.DOUBLE, devices.cpu())
    _, pack = dtypes.codec(a.dtype, a.byteorder)
    buf = a.storage.view()
    for off in tz.iter_offsets(a):
        pack(buf, off, rng.random())
    b = transpose(ops.cast(a))
    dest1 = tz.tensor_create((n, n), dtypes.DOUBLE, devices.cpu())
    dest2 = tz.tensor_create((n, n), dtypes.DOUBLE, devices.cpu())

    fn = kernels.binary_scalar_fn("add", dtypes.DOUBLE, "standard", set())
    store_pack = dtypes.codec(dtypes.DOUBLE, dest2.byteorder)[1]
    unpack = dtypes.codec(dtypes.DOUBLE, a.byteorder)[0]

    best_canon = math.inf
    best_naive = math.inf
    for _ in range(max(1, int(reps))):
        t0 = time.perf_counter()
        ops.add(a, b, dest=dest1)
        dest1.storage.stream.sync()
        best_canon = min(best_canon, time.perf_counter() - t0)

        t0 = time.perf_counter()
        kernels.binary_elementwise_naive(
            (n, n), dest2.storage.view(), dest2.offset, dest2.strides,
            store_pack, a.storage.view(), a.offset, a.strides, unpack,
            b.storage.view(), b.offset, b.strides, unpack, fn)
        best_naive = min(best_naive, time.perf_counter() - t0)

    same = dest1.storage.snapshot() == dest2.storage.snapshot()
    total = n * n
    return "\n".join([
        f"bench: {n}x{n} double add with a transposed operand "
        f"(seed {seed}, best of {reps})",
        f"canonical plan: {best_canon:.4f} s  ({total / best_canon:,.0f} elem/s)",
        f"naive loop:     {best_naive:.4f} s  ({total / best_naive:,.0f} elem/s)",
        f"results identical: {same}",
    ])


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _dtype_arg(name: str) -> dtypes.DType:
    try:
        return dtypes.by_name(name)
    except TidepoolError:
        raise argparse.ArgumentTypeError(f"unknown dtype {name!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tidepool",
        description="dense strided tensor library command-line tool")
    parser.add_argument("--devices", type=int, metavar="N",
                        help="number of emulated devices (overrides "
                             f"{devices.ENV_EMU_DEVICES})")
    parser.add_argument("--strict", action="store_true",
                        help="disable implicit type/device casting")
    parser.add_argument("--mode", choices=dtypes.MODES, default="standard",
                        help="compute mode for conversions run by the command")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("info", help="list devices, properties, and loaded modules")

    qr = sub.add_parser("qr", help="run the in-place QR factorization demo")
    qr.add_argument("--variant", choices=sorted(QR_VARIANTS), default="column")
    qr.add_argument("--dtype", type=_dtype_arg, default=None,
                    help="dtype for both Q and R")
    qr.add_argument("--dtype-q", type=_dtype_arg, default=None)
    qr.add_argument("--dtype-r", type=_dtype_arg, default=None)
    qr.add_argument("--device", default=None, help="device for both Q and R")
    qr.add_argument("--device-q", default=None)
    qr.add_argument("--device-r", default=None)
    qr.add_argument("--byteswap-q", action="store_true",
                    help="byteswap Q before factorizing")

    conv = sub.add_parser("convert", help="re-type or re-order an .otp file")
    conv.add_argument("input")
    conv.add_argument("output")
    conv.add_argument("--dtype", type=_dtype_arg, default=None)
    conv.add_argument("--byteorder", choices=("little", "big"), default=None)

    pr = sub.add_parser("print", help="render an .otp file as text")
    pr.add_argument("input")

    bench = sub.add_parser("bench", help="canonical-plan vs naive-loop timing")
    bench.add_argument("--size", type=int, default=192,
                       help="square matrix edge length")
    bench.add_argument("--reps", type=int, default=3)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.devices is not None:
        devices.configure(args.devices)
    previous_policy = dtypes.set_implicit_casting(not args.strict)
    try:
        if args.command == "info":
            print(cmd_info())
        elif args.command == "qr":
            dtype_q = args.dtype_q or args.dtype or dtypes.DOUBLE
            dtype_r = args.dtype_r or args.dtype or dtypes.DOUBLE
            device_q = devices.by_name(args.device_q or args.device or "cpu")
            device_r = devices.by_name(args.device_r or args.device or "cpu")
            print(cmd_qr(args.variant, dtype_q, dtype_r, device_q, device_r,
                         args.byteswap_q))
        elif args.command == "convert":
            print(cmd_convert(args.input, args.output, args.dtype,
                              args.byteorder, args.mode))
        elif args.command == "print":
            print(cmd_print(args.input))
        elif args.command == "bench":
            print(cmd_bench(args.size, args.reps))
        return EXIT_OK
    except FormatError as exc:
        print(f"tidepool: malformed input: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"tidepool: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except TidepoolError as exc:
        print(f"tidepool: {exc}", file=sys.stderr)
        return EXIT_ERROR
    finally:
        dtypes.set_implicit_casting(previous_policy)


if __name__ == "__main__":
    raise SystemExit(main())
