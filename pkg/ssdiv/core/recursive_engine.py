"""递归细分渲染器（动态并行的 CPU 对照）

每个区域一个任务：与 ASK 相同的决策，细分时直接向同一个线程池
提交 r² 个子任务。父任务不等待子任务，根负责汇合所有 future，
线程池大小有限时也不会饿死。
"""

import logging
import threading
from collections import deque
from concurrent.futures import Future, ThreadPoolExecutor
from typing import Deque, NamedTuple

from ssdiv.core.ask_engine import validate_config
from ssdiv.core.fractal import _dwell_block, _fill_block
from ssdiv.core.olt import initial_grid
from ssdiv.core.subdivision import SUBDIVIDE, FILL, WorkKind, _explore_one, child_offsets, scheme_dispatch
from ssdiv.models.schemas import AskConfig, DwellGrid, RegionOffset, Scheme, TreeStats, Viewport

logger = logging.getLogger(__name__)


class RecursiveResult(NamedTuple):
    grid: DwellGrid
    stats: TreeStats


class RecursiveEngine:
    def __init__(self, n: int, vp: Viewport, d_max: int, config: AskConfig):
        self.n = n
        self.vp = vp
        self.d_max = d_max
        self.config = config
        validate_config(n, config)
        self._lock = threading.Lock()
        self._pending: Deque[Future] = deque()
        self._stats = TreeStats()

    def _submit(self, fn, *args) -> None:
        fut = self._pool.submit(fn, *args)
        with self._lock:
            self._pending.append(fut)

    def _count(self, depth: int) -> None:
        with self._lock:
            s = self._stats
            s.spawned += 1
            s.per_depth[depth] = s.per_depth.get(depth, 0) + 1
            s.max_depth = max(s.max_depth, depth)

    def _tile_task(self, tile, value: int) -> None:
        bounds = self.vp.as_tuple()
        if value >= 0:
            _fill_block(self._grid.cells, tile.y, tile.x, tile.h, tile.w, value)
        else:
            _dwell_block(self._grid.cells, tile.y, tile.x, tile.h, tile.w, self.n, *bounds, self.d_max)

    def _region_task(self, x: int, y: int, side: int, depth: int) -> None:
        self._count(depth)
        config = self.config
        sbr = config.scheme is Scheme.SBR
        outcome, value = _explore_one(
            self._grid.cells, y, x, side, self.n, *self.vp.as_tuple(),
            self.d_max, config.r, config.B, sbr,
        )
        if outcome == SUBDIVIDE:
            child_side = side // config.r
            for dx, dy in child_offsets(config.r, child_side):
                self._submit(self._region_task, x + int(dx), y + int(dy), child_side, depth + 1)
        elif not sbr:
            kind = WorkKind.FILL if outcome == FILL else WorkKind.LEAF
            tiles = scheme_dispatch(RegionOffset(x=x, y=y, side=side), kind, config)
            with self._lock:
                self._stats.tile_tasks += len(tiles)
            for tile in tiles:
                self._submit(self._tile_task, tile, int(value) if outcome == FILL else -1)

    def render(self) -> RecursiveResult:
        self._grid = DwellGrid.blank(self.n, self.vp, self.d_max)
        self._stats = TreeStats()
        self._pending.clear()
        roots = initial_grid(self.n, self.config.g)
        with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
            self._pool = pool
            for x, y in roots.valid():
                self._submit(self._region_task, int(x), int(y), roots.side, 1)
            # 根汇合：子任务总是在父任务结束前入队，队列空即全部完成
            while True:
                with self._lock:
                    if not self._pending:
                        break
                    fut = self._pending.popleft()
                fut.result()
        logger.debug(
            "recursive render n=%d %s: %d tasks, depth %d",
            self.n, self.config.scheme.value, self._stats.spawned, self._stats.max_depth,
        )
        return RecursiveResult(self._grid, self._stats)


def recursive_render(n: int, vp: Viewport, d_max: int, config: AskConfig):
    """递归渲染，返回 (grid, tree stats)"""
    result = RecursiveEngine(n, vp, d_max, config).render()
    return result.grid, result.stats
