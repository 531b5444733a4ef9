"""Device types, device instances, and execution streams.

Two device types exist: the host ``cpu`` and an emulated accelerator type
``emu``.  Emulated devices keep their data in host memory but run every
operation through their own function table and an asynchronous single-worker
queue per stream, so dispatch, casting, and synchronization behave exactly
as they would against a real accelerator backend.

The registry is built once at import (the emulated-device count comes from
the ``TIDEPOOL_EMU_DEVICES`` environment variable, default 2) and is
read-only afterwards; :func:`configure` rebuilds it and must only be called
while no operations are in flight.
"""

from __future__ import annotations

import itertools
import os
import queue
import threading

from .errors import AllocationError, DeviceError

ENV_EMU_DEVICES = "TIDEPOOL_EMU_DEVICES"
DEFAULT_EMU_DEVICES = 2
DEFAULT_EMU_ARENA_BYTES = 64 * 1024 * 1024


class DeviceType:
    __slots__ = ("name", "supports_byteswapped", "async_capable")

    def __init__(self, name: str, *, supports_byteswapped: bool, async_capable: bool):
        self.name = name
        self.supports_byteswapped = supports_byteswapped
        self.async_capable = async_capable

    def __repr__(self):
        return f"<device type {self.name}>"


CPU_TYPE = DeviceType("cpu", supports_byteswapped=True, async_capable=False)
EMU_TYPE = DeviceType("emu", supports_byteswapped=False, async_capable=True)

_stream_ids = itertools.count()


class Stream:
    """FIFO execution context bound to one device.

    Work submitted to one stream completes in submission order.  On
    synchronous devices (cpu) submission runs the task inline; on
    asynchronous devices a single worker thread drains the queue.  The first
    exception raised by queued work is captured and re-raised by the next
    :meth:`sync`.
    """

    def __init__(self, device: "Device"):
        self.device = device
        self.identifier = next(_stream_ids)
        self._queue: queue.Queue | None = None
        self._worker: threading.Thread | None = None
        self._lock = threading.Lock()
        self._pending_error: BaseException | None = None

    def _ensure_worker(self):
        with self._lock:
            if self._queue is None:
                self._queue = queue.Queue()
                self._worker = threading.Thread(
                    target=self._run, name=f"tidepool-stream-{self.identifier}",
                    daemon=True)
                self._worker.start()

    def _run(self):
        while True:
            task = self._queue.get()
            try:
                task()
            except BaseException as exc:  # surfaced on the next sync()
                if self._pending_error is None:
                    self._pending_error = exc
            finally:
                self._queue.task_done()

    def submit(self, task) -> None:
        if not self.device.type.async_capable:
            task()
            return
        self._ensure_worker()
        self._queue.put(task)

    def sync(self) -> None:
        """Block until all submitted work has completed; re-raise failures."""
        if self._queue is not None:
            self._queue.join()
        if self._pending_error is not None:
            exc, self._pending_error = self._pending_error, None
            raise exc

    def __repr__(self):
        return f"<stream {self.identifier} on {self.device.name}>"


class Device:
    """One device instance of a device type."""

    def __init__(self, dtype_: DeviceType, index: int, arena_bytes: int | None = None):
        self.type = dtype_
        self.index = index
        self.buffer_count = 0
        self.buffer_max_bytes = 0
        self.alloc_count = 0  # raw buffer allocations, for instrumentation
        self._buffer_cache: list[bytearray] = []
        self._arena_bytes = arena_bytes  # None = unmetered (cpu)
        self._arena_used = 0
        self._lock = threading.Lock()
        self._default_stream: Stream | None = None

    @property
    def name(self) -> str:
        if self.type is CPU_TYPE:
            return "cpu"
        return f"{self.type.name}{self.index}"

    @property
    def is_host(self) -> bool:
        return self.type is CPU_TYPE

    @property
    def properties(self) -> dict[str, str]:
        props = {"device-type": self.type.name,
                 "supports-byteswapped": str(self.type.supports_byteswapped).lower()}
        if self._arena_bytes is None:
            props["free-memory"] = "unknown"
        else:
            props["free-memory"] = str(self._arena_bytes - self._arena_used)
            props["arena-bytes"] = str(self._arena_bytes)
            props["processor-count"] = "1"
        return props

    def default_stream(self) -> Stream:
        with self._lock:
            if self._default_stream is None:
                self._default_stream = Stream(self)
            return self._default_stream

    # -- raw buffer management -------------------------------------------

    def allocate(self, nbytes: int) -> bytearray:
        if nbytes < 0:
            raise AllocationError("negative allocation size")
        with self._lock:
            if self._arena_bytes is not None:
                if self._arena_used + nbytes > self._arena_bytes:
                    raise AllocationError(
                        f"{self.name}: arena exhausted "
                        f"({self._arena_used}+{nbytes} > {self._arena_bytes})")
                self._arena_used += nbytes
            self.alloc_count += 1
        return bytearray(nbytes)

    def release(self, nbytes: int) -> None:
        with self._lock:
            if self._arena_bytes is not None:
                self._arena_used = max(0, self._arena_used - nbytes)

    def take_intermediate(self, nbytes: int) -> bytearray:
        """Fetch an intermediate buffer, reusing the configured cache."""
        with self._lock:
            if self.buffer_count > 0 and nbytes <= self.buffer_max_bytes:
                for i, buf in enumerate(self._buffer_cache):
                    if len(buf) >= nbytes:
                        del self._buffer_cache[i]
                        return buf
        return self.allocate(max(nbytes, 1))

    def give_back_intermediate(self, buf: bytearray) -> None:
        with self._lock:
            if (len(self._buffer_cache) < self.buffer_count
                    and len(buf) <= self.buffer_max_bytes):
                self._buffer_cache.append(buf)
                return
        self.release(len(buf))

    def set_arena_bytes(self, nbytes: int) -> None:
        if self._arena_bytes is None:
            raise DeviceError(f"{self.name} has no metered arena")
        with self._lock:
            self._arena_bytes = nbytes

    def __repr__(self):
        return f"<device {self.name}>"


_devices: list[Device] = []


def configure(emu_count: int | None = None,
              emu_arena_bytes: int = DEFAULT_EMU_ARENA_BYTES) -> None:
    """(Re)build the device registry: one cpu plus ``emu_count`` emulated devices."""
    if emu_count is None:
        emu_count = int(os.environ.get(ENV_EMU_DEVICES, DEFAULT_EMU_DEVICES))
    if emu_count < 0:
        raise DeviceError("emulated-device count must be >= 0")
    _devices.clear()
    _devices.append(Device(CPU_TYPE, 0))
    for i in range(emu_count):
        _devices.append(Device(EMU_TYPE, i, arena_bytes=emu_arena_bytes))


def list_devices() -> list[Device]:
    """All devices in stable order: cpu first, then emu by index."""
    return list(_devices)


def cpu() -> Device:
    return _devices[0]


def emu(index: int = 0) -> Device:
    for dev in _devices:
        if dev.type is EMU_TYPE and dev.index == index:
            return dev
    raise DeviceError(f"no emulated device with index {index}")


def by_name(name: str) -> Device:
    for dev in _devices:
        if dev.name == name:
            return dev
    raise DeviceError(f"unknown device {name!r}")


def create_stream(device: Device) -> Stream:
    return Stream(device)


def set_buffer_config(device: Device, count: int, max_bytes: int) -> None:
    """Configure the intermediate-buffer cache; only between operations."""
    if count < 0 or max_bytes < 0:
        raise DeviceError("buffer count and size must be >= 0")
    with device._lock:
        device.buffer_count = count
        device.buffer_max_bytes = max_bytes
        device._buffer_cache.clear()


configure()
