"""tidepool: a stand-alone dense tensor foundation library.

Typed strided tensors over device/stream/storage objects, per-device-type
function dispatch, implicit type promotion, a reusable index algebra, and
overlap-safe execution.  The library is pure Python with no runtime
dependencies; an emulated asynchronous device type stands in for real
accelerators so multi-device code paths stay exercised everywhere.
"""

from . import backend_cpu  # registers the core module + cpu table
from . import backend_emu  # registers the emu table
from . import cli, devices, dispatch, dtypes, indexing, interop, kernels, ops
from . import storage, tensors
from .devices import (create_stream, cpu, emu, list_devices, set_buffer_config)
from .dispatch import (lookup, override_op, register_device_impl,
                       register_module)
from .dtypes import (cast_scalar, implicit_casting, promote,
                     set_implicit_casting, set_warning_handler,
                     widen_for_compute)
from .errors import *  # noqa: F401,F403 - exception names are the public set
from .indexing import (BoundIndex, IndexExpr, apply_index, assign_index,
                       bind_to_size, bind_to_strides, build_index)
from .interop import (ExternalTypeRegistration, convert_to, load_otp1,
                      register_external, save_otp1)
from .ops import (absolute, add, arange, arccosine, arcsine, array_equal,
                  cast, common_device_dtype, conjugate, copy, cosine, divide,
                  ensure, exponential,
                  fill, frobenius_norm, get_status, clear_status, identity,
                  inner, logarithm, matmul, maximum, minimum, multiply,
                  negate, ones, outer, reduce, sine, square_root, subtract,
                  zeros)
from .storage import (set_readonly, set_storage_dtype, set_stream,
                      storage_alloc, storage_from_external)
from .tensors import (MAX_DIMS, Scalar, Tensor, broadcast_to, byteswap,
                      canonicalize, dealloc, diag_view, imag_view, pair_overlap,
                      permute_axes, real_view, render, reshape, self_overlap,
                      set_byteorder, set_default_device, set_default_dtype,
                      tensor_create, tensor_from_nested, tensor_from_storage,
                      transpose)

tensor = tensor_create
from_nested = tensor_from_nested

# dtype objects, mirroring the dtype names used on the wire
bool = dtypes.BOOL  # noqa: A001 - deliberate: tidepool.bool names a dtype
int8 = dtypes.INT8
uint8 = dtypes.UINT8
int16 = dtypes.INT16
uint16 = dtypes.UINT16
int32 = dtypes.INT32
uint32 = dtypes.UINT32
int64 = dtypes.INT64
uint64 = dtypes.UINT64
half = dtypes.HALF
float = dtypes.FLOAT  # noqa: A001
double = dtypes.DOUBLE
complex_half = dtypes.CHALF
complex_float = dtypes.CFLOAT
complex_double = dtypes.CDOUBLE

ALL_DTYPES = dtypes.ALL_DTYPES

__version__ = "0.1.0"
