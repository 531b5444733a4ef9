"""Emulated-device implementation of the core module.

The emulated backend stores data in host memory but is dispatched through
its own function table and runs on asynchronous per-stream worker queues,
so every multi-device code path behaves as it would against a real
accelerator.  Loading this module separately from the core interface is
what makes the dispatch layer's impl-not-loaded error reachable.
"""

from . import dispatch
from .backend_cpu import build_core_table

dispatch.register_device_impl("core", "emu", build_core_table())
