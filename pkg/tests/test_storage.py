"""Storage buffers: external wrapping, display dtype, read-only propagation."""

import pytest

import tidepool as tp
from tidepool import storage as st
from tidepool.errors import ReadOnlyError, StorageError


class TestAlloc:
    def test_zero_byte_storage_is_valid(self):
        s = st.storage_alloc(tp.cpu(), 0)
        assert s.nbytes == 0

    def test_device_placement(self):
        s = st.storage_alloc(tp.emu(0), 64)
        assert s.device is tp.emu(0)
        assert s.nbytes == 64

    def test_default_stream_attached(self):
        s = st.storage_alloc(tp.cpu(), 8)
        assert s.stream.device is tp.cpu()

    def test_negative_size_rejected(self):
        with pytest.raises(StorageError):
            st.storage_alloc(tp.cpu(), -1)


class TestExternal:
    def test_wrap_without_copy(self):
        buf = bytearray(24)
        s = st.storage_from_external(buf)
        assert s.nbytes == 24
        assert s.owned is False
        t = tp.tensor_from_storage(s, (3,), tp.double)
        tp.fill(t, 2.5)
        assert buf != bytearray(24)  # caller's buffer mutated in place

    def test_readonly_wrap_rejects_writes(self):
        s = st.storage_from_external(bytes(24))  # bytes are immutable
        assert s.readonly
        t = tp.tensor_from_storage(s, (3,), tp.double)
        with pytest.raises(ReadOnlyError):
            tp.fill(t, 1.0)

    def test_set_readonly_then_tensor_writes_rejected(self):
        buf = bytearray(24)
        s = st.storage_from_external(buf)
        tp.set_readonly(s)
        t = tp.tensor_from_storage(s, (6,), tp.float)
        with pytest.raises(ReadOnlyError):
            tp.fill(t, 1.0)

    def test_non_host_device_rejected(self):
        with pytest.raises(StorageError):
            st.storage_from_external(bytearray(8), tp.emu(0))


class TestDisplayDtype:
    def test_element_count_follows_dtype(self):
        s = st.storage_alloc(tp.cpu(), 24)
        tp.set_storage_dtype(s, tp.float)
        assert len(s.format_elements()) == 6

    def test_non_dividing_dtype_allowed(self):
        s = st.storage_alloc(tp.cpu(), 10)
        tp.set_storage_dtype(s, tp.double)
        assert len(s.format_elements()) == 1  # trailing bytes undisplayed

    def test_changing_dtype_leaves_tensors_alone(self):
        s = st.storage_alloc(tp.cpu(), 24)
        t = tp.tensor_from_storage(s, (6,), tp.float)
        tp.fill(t, 1.0)
        before = s.snapshot()
        tp.set_storage_dtype(s, tp.int16)
        assert s.snapshot() == before
        assert t.dtype is tp.float
        assert tp.tensors.read_values(t) == [1.0] * 6


class TestSharedViews:
    def test_different_dtypes_share_bytes(self):
        s = st.storage_alloc(tp.cpu(), 8)
        as_int = tp.tensor_from_storage(s, (2,), tp.int32)
        as_float = tp.tensor_from_storage(s, (2,), tp.float)
        tp.fill(as_int, 0)
        tp.fill(as_float, 1.0)
        # int view observes the float bit pattern at the shared bytes
        assert tp.tensors.read_values(as_int) == [0x3F800000, 0x3F800000]

    def test_readonly_failure_leaves_bytes_identical(self):
        s = st.storage_alloc(tp.cpu(), 32)
        t = tp.tensor_from_storage(s, (4,), tp.double)
        tp.fill(t, 3.0)
        tp.set_readonly(s)
        before = s.snapshot()
        for mutate in (lambda: tp.fill(t, 9.0),
                       lambda: tp.add(t, t, dest=t),
                       lambda: tp.assign_index(t, (slice(0, 2),), 5.0),
                       lambda: tp.byteswap(t)):
            with pytest.raises(ReadOnlyError):
                mutate()
        assert s.snapshot() == before

    def test_storage_outlives_views(self):
        t = tp.ones((4,), tp.double)
        view = tp.reshape(t, (2, 2))
        s = t.storage
        del t
        assert view.storage is s
        assert tp.tensors.read_values(view) == [1.0] * 4


class TestStreamRebind:
    def test_rebind_requires_same_device(self):
        s = st.storage_alloc(tp.cpu(), 8)
        other = tp.create_stream(tp.emu(0))
        with pytest.raises(StorageError):
            tp.set_stream(s, other)

    def test_rebind_drains_old_stream(self):
        dev = tp.emu(0)
        t = tp.tensor_create((128,), tp.double, dev)
        tp.fill(t, 4.0)
        fresh = tp.create_stream(dev)
        tp.set_stream(t.storage, fresh)  # must sync the pending fill first
        assert tp.tensors.read_values(t) == [4.0] * 128
