"""Adaptive Serial Kernels 渲染器

每一层是一次扁平的并行 pass：read-OLT 中的全部区域分给线程池，
层与层之间有完整的屏障。需要细分的区域通过共享计数器在 write-OLT
中预留 r² 个连续槽位，一层结束后 write-OLT 变成下一层的 read-OLT。
"""

import logging
from concurrent.futures import Executor, ThreadPoolExecutor
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from ssdiv.core.errors import ConfigError, RegionError
from ssdiv.core.fractal import perimeter_pixels
from ssdiv.core.linearize import olt_size_k
from ssdiv.core.olt import OLT, initial_grid, reserve_slots
from ssdiv.core.subdivision import (
    FILL, LEAF, SUBDIVIDE, _explore_chunk, _work_tiles, child_offsets, tile_array,
)
from ssdiv.models.schemas import AskConfig, DwellGrid, LevelStats, Scheme, Viewport

logger = logging.getLogger(__name__)

# 每个 worker 分到的区域块 / tile 块数
CHUNKS_PER_WORKER = 4


class AskResult(NamedTuple):
    grid: DwellGrid
    stats: List[LevelStats]
    # (k, 4) 数组，每行 (x, y, side, outcome)，仅在 record_regions=True 时提供
    regions: Optional[np.ndarray]


def _chunks(total: int, workers: int) -> List[Tuple[int, int]]:
    parts = min(total, max(1, workers) * CHUNKS_PER_WORKER)
    if parts == 0:
        return []
    edges = np.linspace(0, total, parts + 1).astype(np.int64)
    return [(int(edges[k]), int(edges[k + 1])) for k in range(parts) if edges[k + 1] > edges[k]]


def _run(pool: Optional[Executor], fn, items) -> None:
    if pool is None:
        for item in items:
            fn(item)
    else:
        # list() 等待全部完成，同时把任务里的异常抛出来
        list(pool.map(fn, items))


def validate_config(n: int, config: AskConfig) -> int:
    """检查 n = g·B·r^k 精确铺满，返回 k"""
    k = config.levels_for(n)
    if k is None:
        raise ConfigError(
            f"config g={config.g}, r={config.r}, B={config.B} does not tile n={n} exactly "
            f"(need n = g*B*r^k)"
        )
    return k


def process_level(
    read_olt: OLT,
    grid: DwellGrid,
    config: AskConfig,
    write_olt: Optional[OLT] = None,
    pool: Optional[Executor] = None,
    level: int = 0,
    trace: Optional[List[np.ndarray]] = None,
) -> Tuple[OLT, LevelStats]:
    """处理一层

    Args:
        read_olt: 本层区域（同一边长）
        grid: 输出网格，原地写入
        config: {g, r, B}、调度方式、tile、workers
        write_olt: 可复用的下一层 OLT；会被 reset 成 read_olt.size·r² 的容量
        pool: 线程池；None 时串行执行
        level: 层号，仅用于统计
        trace: 非 None 时追加本层 fill/leaf 区域 (x, y, side, outcome)

    Returns:
        (write_olt, 本层统计)
    """
    side = read_olt.side
    m = read_olt.size
    if side < 1 or (m and (read_olt.valid() < 0).any()):
        raise RegionError("read-OLT holds invalid entries")
    r, R = config.r, config.r * config.r
    child_side = side // r
    capacity = olt_size_k(m, (r, r))
    if write_olt is None:
        write_olt = OLT(capacity, child_side)
    else:
        write_olt.reset(capacity, child_side)

    n, vp, d_max = grid.n, grid.viewport, grid.d_max
    bounds = vp.as_tuple()
    entries = read_olt.valid()
    outcomes = np.empty(m, dtype=np.int8)
    values = np.zeros(m, dtype=np.int64)
    template = child_offsets(r, child_side) if child_side >= 1 else None
    sbr = config.scheme is Scheme.SBR

    def explore(span: Tuple[int, int]) -> None:
        start, stop = span
        _explore_chunk(grid.cells, entries, side, start, stop, outcomes, values,
                       n, *bounds, d_max, r, config.B, sbr)
        for idx in np.flatnonzero(outcomes[start:stop] == SUBDIVIDE) + start:
            base = reserve_slots(write_olt.counter, R)
            write_olt.entries[base:base + R] = template + entries[idx]

    _run(pool, explore, _chunks(m, config.workers))

    fill_mask = outcomes == FILL
    leaf_mask = outcomes == LEAF
    tiles = 0
    if not sbr:
        # MBR：fill / leaf 区域的像素工作拆成 tile 任务
        work_mask = fill_mask | leaf_mask
        work_values = np.where(leaf_mask, -1, values)[work_mask]
        table = tile_array(entries[work_mask, 0], entries[work_mask, 1], side, work_values, config.tile)
        tiles = len(table)

        def do_tiles(span: Tuple[int, int]) -> None:
            _work_tiles(grid.cells, table, span[0], span[1], n, *bounds, d_max)

        _run(pool, do_tiles, _chunks(tiles, config.workers))

    filled = int(fill_mask.sum())
    leaf = int(leaf_mask.sum())
    subdivided = m - filled - leaf
    if write_olt.count != subdivided:
        raise RuntimeError(f"reservation count {write_olt.count} != subdivided regions {subdivided}")
    if trace is not None:
        done = fill_mask | leaf_mask
        rows = np.empty((int(done.sum()), 4), dtype=np.int64)
        rows[:, 0:2] = entries[done]
        rows[:, 2] = side
        rows[:, 3] = outcomes[done]
        trace.append(rows)

    stats = LevelStats(
        level=level,
        regions_in=m,
        filled=filled,
        subdivided=subdivided,
        leaf_processed=leaf,
        q_pixels=m * perimeter_pixels(side),
        t_pixels=filled * side * side,
        a_pixels=leaf * side * side,
    )
    logger.debug(
        "level %d: side=%d in=%d filled=%d subdivided=%d leaf=%d tiles=%d",
        level, side, m, filled, subdivided, leaf, tiles,
    )
    return write_olt, stats


class AskEngine:
    def __init__(self, n: int, vp: Viewport, d_max: int, config: AskConfig, record_regions: bool = False):
        self.n = n
        self.vp = vp
        self.d_max = d_max
        self.config = config
        self.record_regions = record_regions
        self.k = validate_config(n, config)

    def render(self) -> AskResult:
        config = self.config
        grid = DwellGrid.blank(self.n, self.vp, self.d_max)
        trace: Optional[List[np.ndarray]] = [] if self.record_regions else None
        stats: List[LevelStats] = []

        read = initial_grid(self.n, config.g)
        spare = OLT(0, read.side)
        pool = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
        try:
            level = 0
            while read.size > 0:
                write, level_stats = process_level(read, grid, config, spare, pool, level, trace)
                stats.append(level_stats)
                # write-OLT 变成下一层的 read-OLT，旧 read 缓冲区留作下一层的 write
                read, spare = write, read
                level += 1
        finally:
            if pool is not None:
                pool.shutdown(wait=True)

        regions = None
        if trace is not None:
            regions = np.concatenate(trace) if trace else np.empty((0, 4), dtype=np.int64)
        logger.debug("ASK render n=%d %s: %d levels", self.n, config.scheme.value, len(stats))
        return AskResult(grid, stats, regions)


def ask_render(n: int, vp: Viewport, d_max: int, config: AskConfig) -> Tuple[DwellGrid, List[LevelStats]]:
    """ASK 完整渲染，返回 (grid, 每层统计)"""
    result = AskEngine(n, vp, d_max, config).render()
    return result.grid, result.stats
