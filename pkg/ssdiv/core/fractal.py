"""Mandelbrot escape-time 内核

所有像素路径（穷举渲染、周长查询、叶子逐像素计算）都经过同一组
numba 内核 _pixel_c / _escape，保证任意引擎得到逐位相同的 dwell。
内核以 nogil 编译，线程池可以真正并行。
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple, Optional

import numpy as np
from numba import njit

from ssdiv.core.errors import RegionError
from ssdiv.models.schemas import DwellGrid, RegionOffset, Viewport

logger = logging.getLogger(__name__)

# 穷举渲染时每个 worker 分到的行块数
ROW_CHUNKS_PER_WORKER = 4


class GridGeom(NamedTuple):
    n: int
    viewport: Viewport
    d_max: int


# ============== numba kernels ==============

@njit(cache=True, nogil=True)
def _pixel_c(i, j, n, re_min, re_max, im_min, im_max):
    re = re_min + (j + 0.5) * (re_max - re_min) / n
    im = im_min + (i + 0.5) * (im_max - im_min) / n
    return re, im


@njit(cache=True, nogil=True)
def _escape(cr, ci, d_max):
    zr = 0.0
    zi = 0.0
    for it in range(1, d_max + 1):
        zr, zi = zr * zr - zi * zi + cr, 2.0 * zr * zi + ci
        if zr * zr + zi * zi > 4.0:
            return it
    return d_max


@njit(cache=True, nogil=True)
def _pixel_dwell(i, j, n, re_min, re_max, im_min, im_max, d_max):
    cr, ci = _pixel_c(i, j, n, re_min, re_max, im_min, im_max)
    return _escape(cr, ci, d_max)


@njit(cache=True, nogil=True)
def _dwell_block(cells, y0, x0, h, w, n, re_min, re_max, im_min, im_max, d_max):
    for i in range(y0, y0 + h):
        for j in range(x0, x0 + w):
            cells[i, j] = _pixel_dwell(i, j, n, re_min, re_max, im_min, im_max, d_max)


@njit(cache=True, nogil=True)
def _fill_block(cells, y0, x0, h, w, value):
    for i in range(y0, y0 + h):
        for j in range(x0, x0 + w):
            cells[i, j] = value


@njit(cache=True, nogil=True)
def _perimeter_dwell(y, x, side, n, re_min, re_max, im_min, im_max, d_max):
    """区域边界上的公共 dwell；不一致时返回 -1

    顺序：上边 左->右，下边 左->右，再是左右两列（不含四角）
    """
    common = _pixel_dwell(y, x, n, re_min, re_max, im_min, im_max, d_max)
    uniform = True
    last = y + side - 1
    for j in range(x + 1, x + side):
        if _pixel_dwell(y, j, n, re_min, re_max, im_min, im_max, d_max) != common:
            uniform = False
    if side > 1:
        for j in range(x, x + side):
            if _pixel_dwell(last, j, n, re_min, re_max, im_min, im_max, d_max) != common:
                uniform = False
        for i in range(y + 1, last):
            if _pixel_dwell(i, x, n, re_min, re_max, im_min, im_max, d_max) != common:
                uniform = False
            if _pixel_dwell(i, x + side - 1, n, re_min, re_max, im_min, im_max, d_max) != common:
                uniform = False
    if uniform:
        return common
    return -1


def perimeter_pixels(side: int) -> int:
    """边界像素个数，每个像素只算一次"""
    return 1 if side == 1 else 4 * side - 4


# ============== Python API ==============

def pixel_to_complex(i: int, j: int, n: int, vp: Viewport) -> complex:
    """像素中心 -> 复平面点（i 为行，j 为列）"""
    if not (0 <= i < n and 0 <= j < n):
        raise RegionError(f"pixel ({i}, {j}) outside a {n}x{n} grid")
    re, im = _pixel_c(i, j, n, *vp.as_tuple())
    return complex(re, im)


def dwell(c: complex, d_max: int) -> int:
    """z_{i+1} = z_i² + c, z_0 = 0 的逃逸迭代次数，不逃逸返回 d_max"""
    if d_max < 1:
        raise ValueError(f"d_max must be >= 1 (got {d_max})")
    return int(_escape(float(c.real), float(c.imag), d_max))


def _check_region(n: int, region: RegionOffset) -> None:
    if not region.fits(n):
        raise RegionError(f"region {region} does not fit in a {n}x{n} grid")


def perimeter_common_dwell(grid_geom, region: RegionOffset) -> Optional[int]:
    """区域周长上所有像素的 dwell 都相同则返回该值，否则返回 None

    Args:
        grid_geom: (n, viewport, d_max)，也可以直接传 DwellGrid
        region: 待查询区域
    """
    if isinstance(grid_geom, DwellGrid):
        grid_geom = GridGeom(grid_geom.n, grid_geom.viewport, grid_geom.d_max)
    n, vp, d_max = grid_geom
    _check_region(n, region)
    value = _perimeter_dwell(region.y, region.x, region.side, n, *vp.as_tuple(), d_max)
    return None if value < 0 else int(value)


def fill_region(grid: DwellGrid, region: RegionOffset, value: int) -> None:
    """把区域内所有像素写成 value"""
    _check_region(grid.n, region)
    if not 1 <= value <= grid.d_max:
        raise ValueError(f"fill value {value} outside [1, {grid.d_max}]")
    _fill_block(grid.cells, region.y, region.x, region.side, region.side, value)


def exhaustive_render(n: int, vp: Viewport, d_max: int, workers: int = 1) -> DwellGrid:
    """逐像素计算整幅图，行块分给线程池；结果与 workers 无关"""
    if n < 1:
        raise ValueError(f"n must be >= 1 (got {n})")
    grid = DwellGrid.blank(n, vp, d_max)
    bounds = vp.as_tuple()
    chunks = min(n, max(1, workers) * ROW_CHUNKS_PER_WORKER)
    edges = np.linspace(0, n, chunks + 1).astype(np.int64)

    def run(k: int) -> None:
        y0, y1 = int(edges[k]), int(edges[k + 1])
        if y1 > y0:
            _dwell_block(grid.cells, y0, 0, y1 - y0, n, n, *bounds, d_max)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(chunks)))
    else:
        for k in range(chunks):
            run(k)
    logger.debug("exhaustive render n=%d d_max=%d workers=%d", n, d_max, workers)
    return grid
