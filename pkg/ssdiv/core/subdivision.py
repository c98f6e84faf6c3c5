"""Mariani-Silver 区域决策（ASK 与递归引擎共用）

对一个区域：
1. 周长 dwell 一致 -> FILL（任何层都填充）
2. 否则若子区域边长 side // r < B -> LEAF，逐像素计算整个区域
3. 否则 -> SUBDIVIDE，切成 r×r 个子区域
"""

from enum import Enum, IntEnum
from typing import List, NamedTuple

import numpy as np
from numba import njit

from ssdiv.core.fractal import _dwell_block, _fill_block, _perimeter_dwell
from ssdiv.core.linearize import canonical_inverse
from ssdiv.models.schemas import AskConfig, RegionOffset, Scheme

FILL = 0
LEAF = 1
SUBDIVIDE = 2


class RegionOutcome(IntEnum):
    FILL = FILL
    LEAF = LEAF
    SUBDIVIDE = SUBDIVIDE


class WorkKind(str, Enum):
    PERIMETER = "perimeter"
    INSERT = "insert"   # 预留槽位 + 写入子区域
    FILL = "fill"
    LEAF = "leaf"


class Tile(NamedTuple):
    y: int
    x: int
    h: int
    w: int


# ============== numba kernels ==============

@njit(cache=True, nogil=True)
def _explore_one(cells, y, x, side, n, re_min, re_max, im_min, im_max, d_max, r, B, do_work):
    """返回 (outcome, value)；do_work=False 时只做决策，不写像素"""
    value = _perimeter_dwell(y, x, side, n, re_min, re_max, im_min, im_max, d_max)
    if value >= 0:
        if do_work:
            _fill_block(cells, y, x, side, side, value)
        return FILL, value
    if side // r < B:
        if do_work:
            _dwell_block(cells, y, x, side, side, n, re_min, re_max, im_min, im_max, d_max)
        return LEAF, 0
    return SUBDIVIDE, 0


@njit(cache=True, nogil=True)
def _explore_chunk(cells, entries, side, start, stop, outcomes, values,
                   n, re_min, re_max, im_min, im_max, d_max, r, B, do_work):
    # entries[k] = (x, y)
    for k in range(start, stop):
        outcome, value = _explore_one(cells, entries[k, 1], entries[k, 0], side, n,
                                      re_min, re_max, im_min, im_max, d_max, r, B, do_work)
        outcomes[k] = outcome
        values[k] = value


@njit(cache=True, nogil=True)
def _work_tiles(cells, tiles, start, stop, n, re_min, re_max, im_min, im_max, d_max):
    # tiles[k] = (y, x, h, w, value)，value < 0 表示叶子逐像素计算
    for k in range(start, stop):
        y, x, h, w, value = tiles[k, 0], tiles[k, 1], tiles[k, 2], tiles[k, 3], tiles[k, 4]
        if value >= 0:
            _fill_block(cells, y, x, h, w, value)
        else:
            _dwell_block(cells, y, x, h, w, n, re_min, re_max, im_min, im_max, d_max)


# ============== helpers ==============

def child_offsets(r: int, child_side: int) -> np.ndarray:
    """r×r 个子区域相对父区域左上角的 (x, y) 偏移，按 canonical order 排列"""
    offsets = np.empty((r * r, 2), dtype=np.int64)
    for s in range(r * r):
        cx, cy = canonical_inverse(s, (r, r))
        offsets[s] = (cx * child_side, cy * child_side)
    return offsets


def scheme_dispatch(region: RegionOffset, work_kind: WorkKind, config: AskConfig) -> List[Tile]:
    """把一个区域的某类工作拆成任务

    SBR: 一个任务做完整个区域。
    MBR: 填充 / 叶子工作切成 ⌈side/tile⌉² 个 tile；周长与插入始终是单任务。
    """
    whole = [Tile(region.y, region.x, region.side, region.side)]
    if config.scheme is Scheme.SBR or work_kind in (WorkKind.PERIMETER, WorkKind.INSERT):
        return whole
    if region.side <= config.tile:
        return whole
    step = config.tile
    tiles = []
    for ty in range(region.y, region.y + region.side, step):
        h = min(step, region.y + region.side - ty)
        for tx in range(region.x, region.x + region.side, step):
            tiles.append(Tile(ty, tx, h, min(step, region.x + region.side - tx)))
    return tiles


def tile_array(x: np.ndarray, y: np.ndarray, side: int, values: np.ndarray, tile: int) -> np.ndarray:
    """把一层里所有 fill/leaf 区域按 tile 切开，得到 (t, 5) 的任务表

    values < 0 的区域是叶子。顺序与逐区域调用 scheme_dispatch 一致。
    """
    step = min(tile, side)
    per_axis = -(-side // step)
    oy, ox = np.divmod(np.arange(per_axis * per_axis, dtype=np.int64), per_axis)
    oy *= step
    ox *= step
    m = len(x)
    tiles = np.empty((m * per_axis * per_axis, 5), dtype=np.int64)
    tiles[:, 0] = (y[:, None] + oy[None, :]).ravel()
    tiles[:, 1] = (x[:, None] + ox[None, :]).ravel()
    tiles[:, 2] = np.minimum(step, side - np.tile(oy, m))
    tiles[:, 3] = np.minimum(step, side - np.tile(ox, m))
    tiles[:, 4] = np.repeat(values, per_axis * per_axis)
    return tiles
