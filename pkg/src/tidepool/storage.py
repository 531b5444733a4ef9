"""Contiguous device memory with a display dtype and an owning stream.

A Storage is a flat byte buffer on one device.  Its dtype is cosmetic: it
sets how the raw bytes are formatted for display and the default dtype for
tensors created from the storage, and can be changed freely without
affecting existing tensor views.  Marking a storage read-only blocks every
mutation, direct or through any derived tensor.
"""

from __future__ import annotations

import threading

from . import devices, dtypes
from .errors import StorageError


class Storage:
    def __init__(self, device: devices.Device, buf, *, owned: bool,
                 dtype: dtypes.DType = dtypes.UINT8,
                 byteorder: str = dtypes.NATIVE_ORDER,
                 intermediate: bool = False):
        self.device = device
        self.stream = device.default_stream()
        self._buf = buf
        self.nbytes = len(buf)
        self.dtype = dtype
        self.byteorder = byteorder
        self.readonly = False
        self.owned = owned
        self.tensor_refs = 0
        self._refs_lock = threading.Lock()
        self._released = not owned
        self._intermediate = intermediate

    # -- buffer access ------------------------------------------------------

    def view(self) -> memoryview:
        return memoryview(self._buf)

    def snapshot(self) -> bytes:
        """Copy of the raw bytes (after draining pending work)."""
        self.stream.sync()
        return bytes(self._buf)

    # -- lifecycle ----------------------------------------------------------

    def retain(self) -> None:
        with self._refs_lock:
            self.tensor_refs += 1

    def drop(self) -> None:
        with self._refs_lock:
            self.tensor_refs -= 1
            last = self.tensor_refs <= 0
        if last:
            self.release()

    def release(self) -> None:
        """Return the allocation to the device accounting (idempotent)."""
        if self._released:
            return
        self._released = True
        if self._intermediate:
            self.device.give_back_intermediate(self._buf)
        else:
            self.device.release(self.nbytes)

    def __del__(self):
        try:
            self.release()
        except Exception:
            pass

    # -- display ------------------------------------------------------------

    def format_elements(self, limit: int = 64) -> list:
        """Element values under the display dtype; trailing bytes undisplayed."""
        self.stream.sync()
        unpack, _ = dtypes.codec(self.dtype, self.byteorder)
        count = min(self.nbytes // self.dtype.size, limit)
        buf = self.view()
        return [unpack(buf, i * self.dtype.size) for i in range(count)]

    def __repr__(self):
        ro = ", readonly" if self.readonly else ""
        return (f"<storage {self.nbytes} bytes as {self.dtype.name} on "
                f"{self.device.name} ({self.byteorder}-endian{ro})>")


def storage_alloc(device: devices.Device, nbytes: int,
                  dtype: dtypes.DType = dtypes.UINT8) -> Storage:
    """Allocate ``nbytes`` of uninitialized storage on the device."""
    if nbytes < 0:
        raise StorageError("storage size must be >= 0")
    buf = device.allocate(nbytes)
    return Storage(device, buf, owned=True, dtype=dtype)


def storage_from_external(buffer, device: devices.Device | None = None) -> Storage:
    """Wrap a caller-provided host buffer without copying.

    The caller keeps the buffer alive for the storage's lifetime.  A
    read-only source buffer yields a read-only storage.
    """
    if device is None:
        device = devices.cpu()
    if not device.is_host:
        raise StorageError("external buffers must live in host memory")
    view = memoryview(buffer)
    if view.ndim != 1 or view.itemsize != 1:
        view = view.cast("B")
    storage = Storage(device, view, owned=False)
    if view.readonly:
        storage.readonly = True
    return storage


def set_storage_dtype(s: Storage, d: dtypes.DType) -> None:
    """Change the display/default dtype; bytes and tensor views are untouched."""
    s.dtype = d


def set_readonly(s: Storage, flag: bool = True) -> None:
    s.readonly = bool(flag)


def set_stream(s: Storage, stream: devices.Stream) -> None:
    """Re-bind the storage to another stream after draining the old one."""
    if stream.device is not s.device:
        raise StorageError("stream and storage must share a device")
    s.stream.sync()
    s.stream = stream
