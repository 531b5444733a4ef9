"""Device registry, streams, buffer config, and arena accounting."""

import threading
import time

import pytest

import tidepool as tp
from tidepool import devices
from tidepool.errors import AllocationError, DeviceError


class TestRegistry:
    def test_default_layout(self):
        devs = tp.list_devices()
        assert [d.name for d in devs] == ["cpu", "emu0", "emu1"]

    def test_configure_zero_emulated(self):
        devices.configure(0)
        assert [d.name for d in tp.list_devices()] == ["cpu"]

    def test_configure_four_emulated(self):
        devices.configure(4)
        assert [d.name for d in tp.list_devices()] == \
            ["cpu", "emu0", "emu1", "emu2", "emu3"]

    def test_env_variable_drives_default(self, monkeypatch):
        monkeypatch.setenv(devices.ENV_EMU_DEVICES, "1")
        devices.configure()
        assert [d.name for d in tp.list_devices()] == ["cpu", "emu0"]

    def test_negative_count_rejected(self):
        with pytest.raises(DeviceError):
            devices.configure(-1)

    def test_lookup_by_name(self):
        assert devices.by_name("cpu") is tp.cpu()
        assert devices.by_name("emu1").index == 1
        with pytest.raises(DeviceError):
            devices.by_name("gpu0")

    def test_properties(self):
        cpu = tp.cpu()
        assert cpu.properties["free-memory"] == "unknown"
        emu = tp.emu(0)
        assert int(emu.properties["free-memory"]) > 0
        assert emu.properties["supports-byteswapped"] == "false"
        assert cpu.properties["supports-byteswapped"] == "true"


class TestStreams:
    def test_empty_stream_sync_returns_immediately(self):
        s = tp.create_stream(tp.cpu())
        s.sync()

    def test_distinct_identifiers(self):
        a = tp.create_stream(tp.emu(0))
        b = tp.create_stream(tp.emu(0))
        assert a.identifier != b.identifier

    def test_fifo_completion_order_on_async_device(self):
        s = tp.create_stream(tp.emu(0))
        trace = []

        def task(n, delay):
            def run():
                time.sleep(delay)
                trace.append(n)
            return run

        # later tasks are faster; order must still be submission order
        for n, delay in enumerate([0.02, 0.01, 0.0, 0.005]):
            s.submit(task(n, delay))
        s.sync()
        assert trace == [0, 1, 2, 3]

    def test_sync_reraises_worker_failure(self):
        s = tp.create_stream(tp.emu(0))

        def boom():
            raise RuntimeError("injected")

        s.submit(boom)
        with pytest.raises(RuntimeError, match="injected"):
            s.sync()
        s.sync()  # error is delivered once

    def test_cross_stream_reader_waits_for_writer(self):
        # a slow fill on a dedicated emu stream must complete before an add
        # executing on the default stream reads the same storage
        dev = tp.emu(0)
        a = tp.tensor_create((64,), tp.double, dev)
        writer = tp.create_stream(dev)
        tp.set_stream(a.storage, writer)
        b = tp.ones((64,), tp.double, dev)
        slow_calls = []

        def slow_wrapper(original):
            def run(*args, **kwargs):
                time.sleep(0.05)
                slow_calls.append(1)
                return original(*args, **kwargs)
            return run

        restore = tp.dispatch.override_op("core", "emu", "fill", slow_wrapper)
        try:
            tp.fill(a, 7.0)  # queued on the writer stream, slowed down
            out = tp.add(b, a)  # reader must wait on the writer's pending work
            out.storage.stream.sync()
            assert tp.tensors.read_values(out) == [8.0] * 64
            assert slow_calls
        finally:
            restore()

    def test_concurrent_streams_make_progress(self):
        dev0, dev1 = tp.emu(0), tp.emu(1)
        outs = []

        def work(dev):
            t = tp.ones((32,), tp.double, dev)
            out = tp.add(t, t)
            out.storage.stream.sync()
            outs.append(tp.tensors.read_values(out))

        threads = [threading.Thread(target=work, args=(d,))
                   for d in (dev0, dev1)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
        assert outs == [[2.0] * 32, [2.0] * 32]


class TestBufferConfig:
    def test_cache_reuse_for_overlap_intermediates(self):
        dev = tp.emu(0)
        tp.set_buffer_config(dev, 2, 1 << 20)
        try:
            t = tp.cast(tp.reshape(tp.arange(25), (5, 5)), device=dev)
            t.storage.stream.sync()
            before = dev.alloc_count
            tp.assign_index(t, (slice(0, 2), slice(None)),
                            tp.apply_index(t, (slice(1, 3), slice(None))))
            t.storage.stream.sync()
            first = dev.alloc_count - before
            tp.assign_index(t, (slice(0, 2), slice(None)),
                            tp.apply_index(t, (slice(1, 3), slice(None))))
            t.storage.stream.sync()
            second = dev.alloc_count - before - first
            assert first == 1  # one fresh intermediate, then cached
            assert second == 0  # reused from the cache
        finally:
            tp.set_buffer_config(dev, 0, 0)

    def test_cache_disabled_allocates_every_time(self):
        dev = tp.cpu()
        tp.set_buffer_config(dev, 0, 0)
        t = tp.reshape(tp.arange(25), (5, 5))
        before = dev.alloc_count
        tp.assign_index(t, (slice(0, 2), slice(None)),
                        tp.apply_index(t, (slice(1, 3), slice(None))))
        tp.assign_index(t, (slice(0, 2), slice(None)),
                        tp.apply_index(t, (slice(1, 3), slice(None))))
        assert dev.alloc_count - before == 2

    def test_oversized_need_falls_back_to_fresh_allocation(self):
        dev = tp.emu(0)
        tp.set_buffer_config(dev, 2, 16)  # max 16 bytes cached
        try:
            t = tp.cast(tp.reshape(tp.arange(25), (5, 5)), device=dev)
            t.storage.stream.sync()
            before = dev.alloc_count
            tp.assign_index(t, (slice(0, 2), slice(None)),
                            tp.apply_index(t, (slice(1, 3), slice(None))))
            tp.assign_index(t, (slice(0, 2), slice(None)),
                            tp.apply_index(t, (slice(1, 3), slice(None))))
            t.storage.stream.sync()
            assert dev.alloc_count - before == 2  # both too big to cache
        finally:
            tp.set_buffer_config(dev, 0, 0)

    def test_bad_config_rejected(self):
        with pytest.raises(DeviceError):
            tp.set_buffer_config(tp.cpu(), -1, 0)


class TestArena:
    def test_exhaustion_raises(self):
        devices.configure(1, emu_arena_bytes=256)
        dev = tp.emu(0)
        keep = tp.tensor_create((16,), tp.double, dev)  # 128 bytes live
        with pytest.raises(AllocationError):
            tp.tensor_create((32,), tp.double, dev)  # would exceed 256
        assert keep.nelem == 16

    def test_dealloc_returns_arena_memory(self):
        devices.configure(1, emu_arena_bytes=4096)
        dev = tp.emu(0)
        before = int(dev.properties["free-memory"])
        t = tp.tensor_create((64,), tp.double, dev)
        during = int(dev.properties["free-memory"])
        tp.dealloc(t)
        after = int(dev.properties["free-memory"])
        assert during == before - 512
        assert after == before
