"""Module registry and per-device-type function look-up tables.

A module registers an interface once; device implementations attach
per-device-type tables of operation handles any time afterwards.  Lookups
distinguish "no implementation loaded for this device type" from "the
implementation does not provide this operation".  Handles count their calls
and can be overridden with wrappers for instrumentation or fault injection.

Registration, override, and finalization require exclusive access (no
operations in flight); steady-state lookups are lock-free.
"""

from __future__ import annotations

import itertools
from typing import Callable

from .errors import ImplNotLoadedError, ModuleRegistryError, OpNotProvidedError


class ModuleDescriptor:
    __slots__ = ("name", "dependencies", "load_sequence")

    def __init__(self, name: str, dependencies: tuple[str, ...] = ()):
        self.name = name
        self.dependencies = tuple(dependencies)
        self.load_sequence = -1

    def __repr__(self):
        return f"<module {self.name} (seq {self.load_sequence})>"


class OpHandle:
    """Callable table entry with a call counter and an override slot."""

    __slots__ = ("module", "device_type", "op", "_original", "_current",
                 "call_count")

    def __init__(self, module: str, device_type: str, op: str, fn: Callable):
        self.module = module
        self.device_type = device_type
        self.op = op
        self._original = fn
        self._current = fn
        self.call_count = 0

    def __call__(self, *args, **kwargs):
        self.call_count += 1
        return self._current(*args, **kwargs)

    def override(self, wrapper: Callable) -> Callable[[], None]:
        """Replace the implementation with ``wrapper(original)``.

        Returns a restore callable that reinstates the previous function.
        """
        previous = self._current
        self._current = wrapper(previous)

        def restore():
            self._current = previous

        return restore

    def __repr__(self):
        return (f"<op {self.module}/{self.device_type}/{self.op} "
                f"calls={self.call_count}>")


class _Registry:
    def __init__(self):
        self.modules: dict[str, ModuleDescriptor] = {}
        self.tables: dict[tuple[str, str], dict[str, OpHandle]] = {}
        self.contexts: dict[tuple[str, int], dict] = {}
        self._seq = itertools.count()


_registry = _Registry()


def register_module(desc: ModuleDescriptor | str,
                    dependencies: tuple[str, ...] = ()) -> ModuleDescriptor:
    if isinstance(desc, str):
        desc = ModuleDescriptor(desc, dependencies)
    if desc.name in _registry.modules:
        raise ModuleRegistryError(f"module {desc.name!r} already registered")
    for dep in desc.dependencies:
        if dep == desc.name:
            raise ModuleRegistryError(f"module {desc.name!r} depends on itself")
        if dep not in _registry.modules:
            raise ModuleRegistryError(
                f"module {desc.name!r} depends on unregistered {dep!r}")
    desc.load_sequence = next(_registry._seq)
    _registry.modules[desc.name] = desc
    return desc


def register_device_impl(module: str, device_type: str,
                         table: dict[str, Callable]) -> None:
    if module not in _registry.modules:
        raise ModuleRegistryError(
            f"cannot attach {device_type!r} implementation: "
            f"module {module!r} is not registered")
    key = (module, device_type)
    if key in _registry.tables:
        raise ModuleRegistryError(
            f"implementation for {module!r} on {device_type!r} already loaded")
    _registry.tables[key] = {
        op: OpHandle(module, device_type, op, fn) for op, fn in table.items()}


def add_op(module: str, device_type: str, op: str, fn: Callable) -> None:
    """Add one operation to an existing device table."""
    table = _registry.tables.get((module, device_type))
    if table is None:
        raise ImplNotLoadedError(
            f"module {module!r} has no implementation for device type {device_type!r}")
    table[op] = OpHandle(module, device_type, op, fn)


def lookup(module: str, device_type: str, op: str) -> OpHandle:
    if module not in _registry.modules:
        raise ModuleRegistryError(f"module {module!r} is not registered")
    table = _registry.tables.get((module, device_type))
    if table is None:
        raise ImplNotLoadedError(
            f"module {module!r} has no implementation loaded for "
            f"device type {device_type!r}")
    handle = table.get(op)
    if handle is None:
        raise OpNotProvidedError(
            f"module {module!r} on {device_type!r} does not provide {op!r}")
    return handle


def override_op(module: str, device_type: str, op: str,
                wrapper: Callable) -> Callable[[], None]:
    return lookup(module, device_type, op).override(wrapper)


def loaded_modules(device_type: str) -> list[str]:
    return sorted(m for (m, dt) in _registry.tables if dt == device_type)


def table_stats(module: str, device_type: str) -> dict[str, int]:
    table = _registry.tables.get((module, device_type), {})
    return {op: handle.call_count for op, handle in table.items()}


def get_context(module: str, device) -> dict:
    """Opaque per-(module, device-instance) context slot, created lazily."""
    key = (module, id(device))
    ctx = _registry.contexts.get(key)
    if ctx is None:
        ctx = _registry.contexts[key] = {}
    return ctx


def finalize_module(name: str) -> None:
    """Remove one module; rejected while other modules depend on it."""
    if name not in _registry.modules:
        raise ModuleRegistryError(f"module {name!r} is not registered")
    dependents = [m.name for m in _registry.modules.values()
                  if name in m.dependencies]
    if dependents:
        raise ModuleRegistryError(
            f"module {name!r} still has dependents: {dependents}")
    del _registry.modules[name]
    for key in [k for k in _registry.tables if k[0] == name]:
        del _registry.tables[key]


def finalize_all() -> list[str]:
    """Finalize every module in reverse load order; returns the order used.

    Because registration requires dependencies to pre-exist, reverse load
    order is a reverse topological order of the dependency graph.
    """
    order = sorted(_registry.modules.values(),
                   key=lambda d: d.load_sequence, reverse=True)
    names = [d.name for d in order]
    for name in names:
        finalize_module(name)
    return names


def registered_modules() -> list[ModuleDescriptor]:
    return sorted(_registry.modules.values(), key=lambda d: d.load_sequence)
