import os

import numpy as np
import pytest

from ssdiv.core.ask_engine import AskEngine, ask_render, process_level, validate_config
from ssdiv.core.errors import ConfigError
from ssdiv.core.fractal import exhaustive_render
from ssdiv.core.olt import initial_grid
from ssdiv.core.recursive_engine import recursive_render
from ssdiv.core.subdivision import FILL, Tile, WorkKind, child_offsets, scheme_dispatch
from ssdiv.models.schemas import DEFAULT_VIEWPORT, AskConfig, DwellGrid, RegionOffset, Scheme, Viewport
from ssdiv.services.bench import measure
from ssdiv.services.pgm import mismatch_ppm
from tests.conftest import DWELL, ESCAPE, FULL, INTERIOR

CONFIGS_512 = [(32, 4, 16, Scheme.SBR), (8, 4, 16, Scheme.SBR), (8, 2, 32, Scheme.MBR)]
CONFIGS_2048 = [(32, 4, 16, Scheme.SBR), (32, 2, 32, Scheme.MBR)]


def _config(g, r, B, scheme=Scheme.SBR, workers=1, tile=16):
    return AskConfig(g=g, r=r, B=B, scheme=scheme, workers=workers, tile=tile)


class TestSchemeDispatch:
    def test_sbr_is_one_task(self):
        region = RegionOffset(x=0, y=0, side=256)
        assert scheme_dispatch(region, WorkKind.FILL, _config(2, 2, 2)) == [Tile(0, 0, 256, 256)]

    def test_mbr_fill_is_tiled(self):
        region = RegionOffset(x=256, y=512, side=256)
        tiles = scheme_dispatch(region, WorkKind.FILL, _config(2, 2, 2, Scheme.MBR, tile=16))
        assert len(tiles) == 256
        assert tiles[0] == Tile(512, 256, 16, 16)
        assert tiles[-1] == Tile(512 + 240, 256 + 240, 16, 16)

    @pytest.mark.parametrize("kind", [WorkKind.PERIMETER, WorkKind.INSERT])
    def test_mbr_perimeter_and_insert_stay_whole(self, kind):
        region = RegionOffset(x=0, y=0, side=256)
        assert len(scheme_dispatch(region, kind, _config(2, 2, 2, Scheme.MBR))) == 1

    def test_small_region_is_one_tile(self):
        region = RegionOffset(x=8, y=8, side=8)
        assert scheme_dispatch(region, WorkKind.LEAF, _config(2, 2, 2, Scheme.MBR, tile=16)) == [Tile(8, 8, 8, 8)]

    def test_child_offsets_canonical(self):
        assert child_offsets(2, 4).tolist() == [[0, 0], [4, 0], [0, 4], [4, 4]]
        assert child_offsets(4, 1)[5].tolist() == [1, 1]


class TestValidation:
    @pytest.mark.parametrize("n,g,r,B", [(512, 32, 4, 32), (512, 64, 2, 16), (2048, 32, 4, 32)])
    def test_inexact_tiling(self, n, g, r, B):
        with pytest.raises(ConfigError):
            validate_config(n, _config(g, r, B))
        with pytest.raises(ConfigError):
            recursive_render(n, DEFAULT_VIEWPORT, DWELL, _config(g, r, B))

    def test_levels(self):
        assert validate_config(512, _config(8, 4, 16)) == 1
        assert validate_config(512, _config(32, 4, 16)) == 0


class TestAsk:
    def test_escape_zone_is_one_level(self):
        grid, stats = ask_render(256, ESCAPE, DWELL, _config(16, 2, 4))
        assert len(stats) == 1
        assert stats[0].filled == stats[0].regions_in == 256
        assert (grid.cells == 1).all()

    def test_interior_is_all_d_max(self):
        grid, _ = ask_render(128, INTERIOR, DWELL, _config(4, 2, 8, Scheme.MBR, tile=8))
        assert (grid.cells == DWELL).all()

    @pytest.mark.parametrize("g,r,B,scheme", [(4, 2, 4, Scheme.SBR), (2, 4, 4, Scheme.MBR), (1, 2, 8, Scheme.SBR)])
    def test_level_bound_and_partition(self, g, r, B, scheme):
        config = _config(g, r, B, scheme, tile=4)
        grid, stats = ask_render(128, FULL, DWELL, config)
        k = validate_config(128, config)
        assert len(stats) <= k + 1
        assert grid.is_complete()
        for before, after in zip(stats, stats[1:]):
            assert after.regions_in == before.subdivided * r * r
        assert stats[-1].subdivided == 0
        assert sum(s.t_pixels + s.a_pixels for s in stats) == 128 * 128

    @pytest.mark.parametrize("g,r,B,scheme", CONFIGS_512)
    def test_matches_oracle_512(self, oracle_512, workers, g, r, B, scheme):
        grid, _ = ask_render(512, DEFAULT_VIEWPORT, DWELL, _config(g, r, B, scheme, workers))
        assert grid.is_complete()
        assert mismatch_ppm(grid.cells, oracle_512.cells) <= 1000

    @pytest.mark.parametrize("g,r,B,scheme", CONFIGS_2048)
    def test_matches_oracle_2048(self, oracle_2048, workers, g, r, B, scheme):
        grid, _ = ask_render(2048, DEFAULT_VIEWPORT, DWELL, _config(g, r, B, scheme, workers))
        assert mismatch_ppm(grid.cells, oracle_2048.cells) <= 1000

    def test_filled_regions_agree_with_oracle(self, oracle_512):
        result = AskEngine(512, DEFAULT_VIEWPORT, DWELL, _config(8, 4, 16), record_regions=True).render()
        filled = result.regions[result.regions[:, 3] == FILL]
        total = wrong = 0
        for x, y, side, _ in filled:
            block = oracle_512.cells[y:y + side, x:x + side]
            total += block.size
            wrong += int(np.count_nonzero(block != result.grid.cells[y:y + side, x:x + side]))
        assert total > 0
        assert wrong <= total * 1e-3

    def test_sbr_and_mbr_agree(self):
        sbr, s_stats = ask_render(256, DEFAULT_VIEWPORT, DWELL, _config(8, 2, 8))
        mbr, m_stats = ask_render(256, DEFAULT_VIEWPORT, DWELL, _config(8, 2, 8, Scheme.MBR, tile=4))
        np.testing.assert_array_equal(sbr.cells, mbr.cells)
        assert s_stats == m_stats

    @pytest.mark.parametrize("workers", [2, 5])
    def test_independent_of_workers(self, workers):
        serial, s_stats = ask_render(256, DEFAULT_VIEWPORT, DWELL, _config(8, 2, 8))
        threaded, t_stats = ask_render(256, DEFAULT_VIEWPORT, DWELL, _config(8, 2, 8, workers=workers))
        np.testing.assert_array_equal(serial.cells, threaded.cells)
        assert s_stats == t_stats


def _exact_tiling(rng) -> tuple:
    """随机抽一组 n = g·B·r^k 的配置"""
    e_n = int(rng.integers(3, 8))
    e_r = int(rng.integers(1, 3))
    k = int(rng.integers(0, e_n // e_r + 1))
    e_g = int(rng.integers(0, e_n - k * e_r + 1))
    e_B = e_n - k * e_r - e_g
    return 2 ** e_n, 2 ** e_g, 2 ** e_r, 2 ** e_B, k


class TestPartition:
    # 海马谷附近，边界多，fill / subdivide / leaf 都会出现
    VIEWPORTS = [FULL, DEFAULT_VIEWPORT, Viewport(re_min=-0.8, re_max=-0.7, im_min=0.05, im_max=0.15)]

    def test_every_pixel_covered_once(self):
        rng = np.random.default_rng(11)
        for case in range(240):
            n, g, r, B, k = _exact_tiling(rng)
            vp = self.VIEWPORTS[case % 3]
            scheme = Scheme.MBR if case % 2 else Scheme.SBR
            config = _config(g, r, B, scheme, workers=int(rng.integers(1, 4)), tile=int(2 ** rng.integers(0, 3)))
            result = AskEngine(n, vp, 64, config, record_regions=True).render()

            cover = np.zeros((n, n), dtype=np.int32)
            for x, y, side, _ in result.regions:
                cover[y:y + side, x:x + side] += 1
            assert (cover == 1).all(), f"case {case}: n={n} g={g} r={r} B={B}"
            assert len(result.stats) <= k + 1
            assert result.grid.is_complete()

    def test_each_level_is_compact(self):
        rng = np.random.default_rng(12)
        for case in range(200):
            n, g, r, B, k = _exact_tiling(rng)
            vp = self.VIEWPORTS[case % 3]
            config = _config(g, r, B, Scheme.MBR if case % 2 else Scheme.SBR, tile=2)
            grid = DwellGrid.blank(n, vp, 64)
            read = initial_grid(n, g)
            levels = []
            while read.size > 0:
                write, stats = process_level(read, grid, config, level=len(levels))
                assert write.capacity == read.size * r * r
                assert write.size == stats.subdivided * r * r
                assert write.is_compact()
                assert not write.has_overlap()
                levels.append(stats)
                read = write

            assert grid.is_complete()
            expected = AskEngine(n, vp, 64, config).render()
            assert levels == expected.stats
            np.testing.assert_array_equal(grid.cells, expected.grid.cells)


class TestRecursive:
    def test_escape_zone_spawns_roots_only(self):
        grid, tree = recursive_render(256, ESCAPE, DWELL, _config(16, 2, 4, workers=4))
        assert tree.spawned == 256
        assert tree.max_depth == 1
        assert tree.per_depth == {1: 256}
        assert (grid.cells == 1).all()

    def test_mbr_tile_tasks(self):
        _, tree = recursive_render(256, ESCAPE, DWELL, _config(4, 2, 4, Scheme.MBR, workers=2, tile=16))
        # 16 个边长 64 的区域，各切成 4×4 个 tile
        assert tree.tile_tasks == 16 * 16

    @pytest.mark.parametrize("g,r,B,scheme", CONFIGS_512)
    def test_bit_equal_to_ask(self, workers, g, r, B, scheme):
        config = _config(g, r, B, scheme, workers)
        ask, _ = ask_render(512, DEFAULT_VIEWPORT, DWELL, config)
        rec, _ = recursive_render(512, DEFAULT_VIEWPORT, DWELL, config)
        np.testing.assert_array_equal(ask.cells, rec.cells)

    @pytest.mark.parametrize("g,r,B,scheme", CONFIGS_2048)
    def test_matches_oracle_2048(self, oracle_2048, workers, g, r, B, scheme):
        grid, _ = recursive_render(2048, DEFAULT_VIEWPORT, DWELL, _config(g, r, B, scheme, workers))
        assert mismatch_ppm(grid.cells, oracle_2048.cells) <= 1000

    def test_task_tree_mirrors_ask_levels(self):
        config = _config(2, 2, 4, workers=3)
        _, levels = ask_render(128, FULL, DWELL, config)
        _, tree = recursive_render(128, FULL, DWELL, config)
        assert tree.spawned == sum(s.regions_in for s in levels)
        assert tree.max_depth == len(levels)
        assert tree.per_depth == {i + 1: s.regions_in for i, s in enumerate(levels)}

    def test_single_worker_does_not_deadlock(self):
        grid, tree = recursive_render(128, FULL, DWELL, _config(2, 2, 4, workers=1))
        assert grid.is_complete()
        assert tree.max_depth > 1


@pytest.mark.slow
@pytest.mark.skipif((os.cpu_count() or 1) < 4, reason="needs at least 4 cores")
def test_ask_sbr_beats_exhaustive_at_4096():
    workers = os.cpu_count()
    config = _config(64, 4, 16, workers=workers)
    ex = measure(lambda: exhaustive_render(4096, DEFAULT_VIEWPORT, DWELL, workers), reps=3)
    ask = measure(lambda: ask_render(4096, DEFAULT_VIEWPORT, DWELL, config), reps=3)
    assert ask.mean_ms < 0.5 * ex.mean_ms
