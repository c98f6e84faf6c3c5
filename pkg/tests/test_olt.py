import threading

import numpy as np
import pytest

from ssdiv.core.ask_engine import process_level
from ssdiv.core.errors import ConfigError, OLTCapacityError, RegionError
from ssdiv.core.fractal import exhaustive_render, perimeter_pixels
from ssdiv.core.linearize import olt_size_k
from ssdiv.core.olt import EMPTY, OLT, ReservationCounter, initial_grid, reserve_slots
from ssdiv.core.subdivision import FILL
from ssdiv.models.schemas import DEFAULT_VIEWPORT, AskConfig, DwellGrid, RegionOffset, Scheme
from tests.conftest import DWELL, FULL, INTERIOR


class TestInitialGrid:
    def test_two_by_two(self):
        olt = initial_grid(8, 2)
        assert olt.side == 4
        assert olt.size == olt.count == 4
        assert olt.valid().tolist() == [[0, 0], [4, 0], [0, 4], [4, 4]]

    def test_single_region(self):
        olt = initial_grid(512, 1)
        assert olt.regions() == [RegionOffset(x=0, y=0, side=512)]

    def test_canonical_order(self):
        olt = initial_grid(64, 4)
        xs, ys = olt.valid()[:, 0] // 16, olt.valid()[:, 1] // 16
        np.testing.assert_array_equal(ys * 4 + xs, np.arange(16))
        assert olt.is_compact()
        assert not olt.has_overlap()

    @pytest.mark.parametrize("n,g", [(8, 3), (8, 16), (12, 2)])
    def test_rejects_bad_split(self, n, g):
        with pytest.raises(ConfigError):
            initial_grid(n, g)


class TestReservation:
    def test_sequential_bases(self):
        counter = ReservationCounter(12)
        assert [reserve_slots(counter, 4) for _ in range(3)] == [0, 4, 8]
        assert counter.count == 3
        assert counter.slots == 12

    def test_overflow(self):
        counter = ReservationCounter(6)
        reserve_slots(counter, 4)
        with pytest.raises(OLTCapacityError):
            reserve_slots(counter, 4)
        assert counter.slots == 4

    def test_rejects_empty_reservation(self):
        with pytest.raises(ValueError):
            reserve_slots(ReservationCounter(4), 0)

    def test_concurrent_reservations_are_disjoint(self):
        threads, per_thread, k = 8, 500, 4
        counter = ReservationCounter(threads * per_thread * k)
        bases = [[] for _ in range(threads)]

        def work(t):
            for _ in range(per_thread):
                bases[t].append(reserve_slots(counter, k))

        pool = [threading.Thread(target=work, args=(t,)) for t in range(threads)]
        for th in pool:
            th.start()
        for th in pool:
            th.join()
        flat = sorted(b for part in bases for b in part)
        assert flat == list(range(0, threads * per_thread * k, k))
        assert counter.count == threads * per_thread


class TestOLT:
    def test_reset_reuses_storage(self):
        olt = OLT(16, 4)
        storage = olt._storage
        olt.reset(8, 2)
        assert olt._storage is storage
        assert olt.capacity == 8
        assert (olt.entries == EMPTY).all()
        olt.reset(32, 1)
        assert olt._storage is not storage
        assert olt.capacity == 32

    def test_from_regions(self):
        regions = [RegionOffset(x=0, y=0, side=4), RegionOffset(x=4, y=0, side=4)]
        olt = OLT.from_regions(regions)
        assert olt.regions() == regions
        assert olt.is_compact()

    def test_mixed_sides(self):
        with pytest.raises(RegionError):
            OLT.from_regions([RegionOffset(x=0, y=0, side=4), RegionOffset(x=0, y=0, side=2)])

    def test_overlap_detection(self):
        olt = OLT.from_regions([RegionOffset(x=0, y=0, side=4)] * 2)
        assert olt.has_overlap()


def _config(g, r, B, scheme=Scheme.SBR, tile=4):
    return AskConfig(g=g, r=r, B=B, scheme=scheme, tile=tile, workers=1)


class TestProcessLevel:
    def test_interior_fills_everything(self):
        grid = DwellGrid.blank(64, INTERIOR, DWELL)
        write, stats = process_level(initial_grid(64, 4), grid, _config(4, 2, 4))
        assert write.size == 0
        assert stats.filled == stats.regions_in == 16
        assert stats.t_pixels == 64 * 64
        assert stats.q_pixels == 16 * perimeter_pixels(16)
        assert (grid.cells == DWELL).all()

    def test_subdivides_whole_set(self):
        grid = DwellGrid.blank(8, FULL, DWELL)
        write, stats = process_level(initial_grid(8, 1), grid, _config(1, 2, 4))
        assert stats.subdivided == 1
        assert write.side == 4
        assert write.capacity == olt_size_k(1, (2, 2))
        assert write.valid().tolist() == [[0, 0], [4, 0], [0, 4], [4, 4]]
        assert write.is_compact()

    def test_leaf_when_children_would_be_too_small(self):
        grid = DwellGrid.blank(8, FULL, DWELL)
        write, stats = process_level(initial_grid(8, 1), grid, _config(1, 2, 8))
        assert write.size == 0
        assert stats.leaf_processed == 1
        assert stats.a_pixels == 64
        np.testing.assert_array_equal(grid.cells, exhaustive_render(8, FULL, DWELL).cells)

    def test_mbr_writes_same_pixels(self):
        sbr = DwellGrid.blank(32, FULL, DWELL)
        mbr = DwellGrid.blank(32, FULL, DWELL)
        w1, s1 = process_level(initial_grid(32, 4), sbr, _config(4, 2, 8))
        w2, s2 = process_level(initial_grid(32, 4), mbr, _config(4, 2, 8, Scheme.MBR, tile=2))
        np.testing.assert_array_equal(sbr.cells, mbr.cells)
        assert s1 == s2
        assert sorted(map(tuple, w1.valid())) == sorted(map(tuple, w2.valid()))

    def test_reuses_write_buffer(self):
        grid = DwellGrid.blank(8, FULL, DWELL)
        spare = OLT(64, 1)
        write, _ = process_level(initial_grid(8, 1), grid, _config(1, 2, 4), write_olt=spare)
        assert write is spare
        assert write.capacity == 4

    def test_rejects_invalid_entries(self):
        olt = OLT(2, 4)
        olt.counter.count = olt.counter.slots = 2
        with pytest.raises(RegionError):
            process_level(olt, DwellGrid.blank(8, FULL, DWELL), _config(2, 2, 2))

    def test_trace_records_finished_regions(self):
        grid = DwellGrid.blank(64, INTERIOR, DWELL)
        trace = []
        process_level(initial_grid(64, 2), grid, _config(2, 2, 4), trace=trace)
        assert trace[0].shape == (4, 4)
        assert (trace[0][:, 2] == 32).all()
        assert (trace[0][:, 3] == FILL).all()

    def test_randomized_structure(self):
        rng = np.random.default_rng(5)
        viewports = [FULL, DEFAULT_VIEWPORT]
        for case in range(200):
            # 只抽精确铺满的配置 n = g·B·r^k
            e_n = int(rng.integers(3, 7))
            e_r = int(rng.integers(1, 3))
            k = int(rng.integers(0, e_n // e_r + 1))
            e_g = int(rng.integers(0, e_n - k * e_r + 1))
            e_B = e_n - k * e_r - e_g
            n, g, r, B = 2 ** e_n, 2 ** e_g, 2 ** e_r, 2 ** e_B
            scheme = Scheme.MBR if case % 2 else Scheme.SBR
            grid = DwellGrid.blank(n, viewports[case % 2], 64)
            read = initial_grid(n, g)
            write, stats = process_level(read, grid, _config(g, r, B, scheme, tile=2))

            assert stats.regions_in == g * g
            assert write.count == stats.subdivided
            assert write.size == stats.subdivided * r * r
            assert write.capacity == olt_size_k(g * g, (r, r))
            assert write.is_compact()
            assert not write.has_overlap()

            # 子区域恰好铺满被细分的父区域，且完成的像素只属于 fill/leaf 区域
            child_cover = np.zeros((n, n), dtype=np.int32)
            side = write.side
            for x, y in write.valid():
                child_cover[y:y + side, x:x + side] += 1
            assert child_cover.max() <= 1
            written = grid.cells > 0
            assert not (written & (child_cover > 0)).any()
            assert (written | (child_cover > 0)).all()
