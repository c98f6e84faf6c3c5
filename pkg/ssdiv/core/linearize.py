"""k 维 canonical order 线性化与 k 维 OLT 容量公式

坐标 p = (p_x, p_y, p_z, ...)，第 0 轴变化最快：
    Ω(p) = Σ_d p_d · Π_{q<d} |G|_q
k=2 时为 |G|_x·p_y + p_x，k=3 时为 |G|_y|G|_x·p_z + |G|_x·p_y + p_x。
"""

from math import prod
from typing import List, Sequence, Tuple

from pydantic import BaseModel, Field, field_validator

from ssdiv.core.errors import LinearizeError


class GridDims(BaseModel):
    """每个轴上的区域数 |G|_1 .. |G|_k"""
    dims: List[int] = Field(..., min_length=1)

    @field_validator("dims")
    @classmethod
    def _positive(cls, v: List[int]) -> List[int]:
        if any(d < 1 for d in v):
            raise ValueError(f"every extent must be >= 1 (got {v})")
        return v

    @property
    def k(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return prod(self.dims)


def _dims(dims) -> GridDims:
    if isinstance(dims, GridDims):
        return dims
    return GridDims(dims=list(dims))


def canonical_index(p: Sequence[int], dims) -> int:
    """k 维坐标 -> 标量"""
    grid = _dims(dims)
    if len(p) != grid.k:
        raise LinearizeError(f"coordinate has {len(p)} axes, grid has {grid.k}")
    s = 0
    stride = 1
    for axis, (coord, extent) in enumerate(zip(p, grid.dims)):
        if not 0 <= coord < extent:
            raise LinearizeError(f"coordinate {coord} out of range [0, {extent}) on axis {axis}")
        s += coord * stride
        stride *= extent
    return s


def canonical_inverse(s: int, dims) -> Tuple[int, ...]:
    """标量 -> k 维坐标"""
    grid = _dims(dims)
    if not 0 <= s < grid.size:
        raise LinearizeError(f"scalar {s} out of range [0, {grid.size})")
    coords = []
    for extent in grid.dims:
        s, coord = divmod(s, extent)
        coords.append(coord)
    return tuple(coords)


def olt_size_k(active_regions: int, r: Sequence[int]) -> int:
    """|T_i^k| = |G_i| · Π r_j"""
    if active_regions < 0:
        raise LinearizeError(f"active region count must be >= 0 (got {active_regions})")
    if any(rj < 1 for rj in r):
        raise LinearizeError(f"every r_j must be >= 1 (got {list(r)})")
    return active_regions * prod(r)
