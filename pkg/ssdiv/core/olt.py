"""Offset-Lookup-Table

entries 是 (capacity, 2) 的 int64 缓冲区，每行 (x, y)；未写入的槽位为 -1。
同一张表里所有区域边长相同（side）。写表时各任务通过共享计数器预留
连续的槽位段，所以一层结束后有效条目恰好是 [0, slots) 的无空洞前缀。
"""

import threading
from typing import Iterable, List, Optional

import numpy as np

from ssdiv.core.errors import ConfigError, OLTCapacityError, RegionError
from ssdiv.core.linearize import olt_size_k
from ssdiv.models.schemas import RegionOffset, is_power_of_two

EMPTY = -1


class ReservationCounter:
    """原子 fetch-and-add 计数器

    count: 已预留的区域数（最终即本层要细分的区域总数）
    slots: 已占用的槽位数
    """

    def __init__(self, capacity: int):
        self._lock = threading.Lock()
        self.capacity = capacity
        self.count = 0
        self.slots = 0

    def reserve(self, k: int) -> int:
        if k < 1:
            raise ValueError(f"must reserve at least one slot (got {k})")
        with self._lock:
            base = self.slots
            if base + k > self.capacity:
                raise OLTCapacityError(
                    f"reserving {k} slots at {base} overflows capacity {self.capacity}"
                )
            self.slots = base + k
            self.count += 1
        return base


def reserve_slots(counter: ReservationCounter, k: int) -> int:
    """预留 k 个连续槽位，返回起始下标"""
    return counter.reserve(k)


class OLT:
    def __init__(self, capacity: int, side: int, storage: Optional[np.ndarray] = None):
        self.reset(capacity, side, storage)

    def reset(self, capacity: int, side: int, storage: Optional[np.ndarray] = None) -> "OLT":
        """清空并按 capacity 重新定尺寸；原缓冲区够大就复用，不够才重新分配"""
        if storage is None:
            storage = getattr(self, "_storage", None)
        if storage is None or storage.shape[0] < capacity:
            storage = np.empty((max(capacity, 1), 2), dtype=np.int64)
        self._storage = storage
        self.entries = storage[:capacity]
        self.entries.fill(EMPTY)
        self.side = side
        self.counter = ReservationCounter(capacity)
        return self

    @classmethod
    def from_regions(cls, regions: Iterable[RegionOffset]) -> "OLT":
        regions = list(regions)
        sides = {reg.side for reg in regions}
        if len(sides) > 1:
            raise RegionError(f"OLT entries must share one side length, got {sorted(sides)}")
        olt = cls(len(regions), sides.pop() if sides else 1)
        for idx, reg in enumerate(regions):
            olt.entries[idx] = (reg.x, reg.y)
        olt.counter.count = olt.counter.slots = len(regions)
        return olt

    @property
    def capacity(self) -> int:
        return self.entries.shape[0]

    @property
    def count(self) -> int:
        return self.counter.count

    @property
    def size(self) -> int:
        """有效条目数"""
        return self.counter.slots

    def valid(self) -> np.ndarray:
        return self.entries[: self.size]

    def regions(self) -> List[RegionOffset]:
        return [RegionOffset(x=int(x), y=int(y), side=self.side) for x, y in self.valid()]

    def is_compact(self) -> bool:
        """有效条目恰好占据 [0, size) 且其余槽位为空"""
        head = self.entries[: self.size]
        tail = self.entries[self.size:]
        return bool((head >= 0).all() and (tail == EMPTY).all())

    def has_overlap(self) -> bool:
        """同边长的区域只要左上角重复就重叠（它们都对齐在 side 的网格上）"""
        head = self.valid()
        if len(head) == 0:
            return False
        return len(np.unique(head, axis=0)) != len(head)


def initial_grid(n: int, g: int) -> OLT:
    """g×g 个边长 n/g 的初始区域，canonical order"""
    if not (is_power_of_two(n) and is_power_of_two(g)) or n % g:
        raise ConfigError(f"g={g} must be a power of two dividing n={n}")
    side = n // g
    total = olt_size_k(1, (g, g))
    olt = OLT(total, side)
    idx = np.arange(total, dtype=np.int64)
    olt.entries[:, 0] = (idx % g) * side
    olt.entries[:, 1] = (idx // g) * side
    olt.counter.count = olt.counter.slots = total
    return olt
