"""Core module interface plus the CPU implementation table.

The core interface and its CPU table load together: host-side staples such
as printing and cross-device copies assume CPU tensor support exists.
"""

from . import dispatch, kernels


def build_core_table() -> dict:
    table = {}
    for op in kernels.BINARY_OPS:
        table[op] = kernels.binary_elementwise
    for op in kernels.UNARY_OPS:
        table[op] = kernels.unary_elementwise
    table["copy"] = kernels.unary_elementwise
    for op in kernels.REDUCE_OPS:
        name = f"reduce_{op}" if op in ("minimum", "maximum") else op
        table[name] = kernels.reduce_strided
    table["matmul"] = kernels.matmul
    table["fill"] = kernels.fill
    table["arange"] = kernels.arange_fill
    table["byteswap"] = kernels.byteswap_inplace
    table["gather"] = kernels.gather
    table["scatter"] = kernels.scatter
    table["scatter_fill"] = kernels.scatter_fill
    return table


dispatch.register_module("core")
dispatch.register_device_impl("core", "cpu", build_core_table())
