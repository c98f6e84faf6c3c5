from datetime import datetime, timezone
from enum import Enum
from typing import Annotated, Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ssdiv.config import get_settings


def is_power_of_two(v: int) -> bool:
    return v >= 1 and (v & (v - 1)) == 0


def exact_log(value: int, base: int) -> Optional[int]:
    """value 恰为 base 的整数次幂时返回指数，否则 None"""
    if value < 1 or base < 2:
        return None
    k = 0
    while value % base == 0:
        value //= base
        k += 1
    return k if value == 1 else None


POW2_RANGE: List[int] = [2 ** k for k in range(1, 11)]  # {2, 4, ..., 1024}


# ============== Enums ==============

class Scheme(str, Enum):
    SBR = "SBR"  # single block (task) per region
    MBR = "MBR"  # multiple tile tasks per region


class Objective(str, Enum):
    MIN_WORK = "MIN_WORK"
    MIN_TIME_SBR = "MIN_TIME_SBR"
    MIN_TIME_MBR = "MIN_TIME_MBR"
    MIN_WALL_TIME = "MIN_WALL_TIME"


class Engine(str, Enum):
    ASK = "ASK"
    RECURSIVE = "RECURSIVE"


class Approach(str, Enum):
    EX = "EX"
    ASK_SBR = "ASK_SBR"
    ASK_MBR = "ASK_MBR"
    REC_SBR = "REC_SBR"
    REC_MBR = "REC_MBR"

    @property
    def engine(self) -> Optional[Engine]:
        if self is Approach.EX:
            return None
        return Engine.ASK if self.value.startswith("ASK") else Engine.RECURSIVE

    @property
    def scheme(self) -> Optional[Scheme]:
        if self is Approach.EX:
            return None
        return Scheme(self.value.split("_")[1])

    @classmethod
    def of(cls, engine: Engine, scheme: Scheme) -> "Approach":
        prefix = "ASK" if engine is Engine.ASK else "REC"
        return cls(f"{prefix}_{scheme.value}")


# ============== Cost Model ==============

class ModelParams(BaseModel):
    """代价模型的全部符号：n, g, r, B, P, A, λ, q, c"""
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    n: int = Field(..., ge=1)           # 域边长（像素）
    g: int = Field(..., ge=1)           # 初始每轴细分数
    r: int = Field(..., ge=2)           # 递归每轴细分数
    B: int = Field(..., ge=1)           # 停止区域边长（像素）
    P: float = Field(0.5, ge=0.0, le=1.0)
    A: float = Field(512.0, ge=1.0)     # 每元素应用工作量（Mandelbrot 即 dwell）
    lam: float = Field(10.0, ge=0.0, alias="lambda")  # S = λ·A
    q: int = Field(128, ge=1)           # 多处理器数
    c: int = Field(64, ge=1)            # 每个多处理器的核数

    @model_validator(mode="after")
    def _check_geometry(self) -> "ModelParams":
        for name in ("n", "g", "r", "B"):
            if not is_power_of_two(getattr(self, name)):
                raise ValueError(f"{name}={getattr(self, name)} is not a power of two")
        if self.g * self.B > self.n:
            raise ValueError(f"g*B = {self.g * self.B} exceeds n = {self.n}")
        if exact_log(self.n // (self.g * self.B), self.r) is None or self.n % (self.g * self.B):
            raise ValueError(
                f"n/(g*B) = {self.n / (self.g * self.B):g} is not an integer power of r={self.r}"
            )
        return self

    @property
    def G(self) -> int:
        return self.g * self.g

    @property
    def R(self) -> int:
        return self.r * self.r

    def evolve(self, **changes: Any) -> "ModelParams":
        """返回修改了部分字段的新参数（重新校验）"""
        data = self.model_dump()
        data.update(changes)
        return ModelParams.model_validate(data)


class ProbProfile(BaseModel):
    """逐层细分概率 P_0 .. P_{τ-2}"""
    per_level: List[Annotated[float, Field(ge=0.0, le=1.0)]] = Field(default_factory=list)

    @classmethod
    def constant(cls, p: float, tau: int) -> "ProbProfile":
        return cls(per_level=[p] * max(tau - 1, 0))


class CostReport(BaseModel):
    tau: int
    per_level_K: List[float]
    L: float
    W_total: float
    W_E: float
    omega: float
    T_ex: Optional[float] = None
    T_sbr: Optional[float] = None
    T_mbr: Optional[float] = None
    S_sbr: Optional[float] = None
    S_mbr: Optional[float] = None


class SimulationResult(BaseModel):
    mean: float
    stderr: float
    trials: int


# ============== Fractal ==============

class Viewport(BaseModel):
    model_config = ConfigDict(frozen=True)

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    @model_validator(mode="after")
    def _check_bounds(self) -> "Viewport":
        if not self.re_min < self.re_max:
            raise ValueError("re_min must be < re_max")
        if not self.im_min < self.im_max:
            raise ValueError("im_min must be < im_max")
        return self

    @classmethod
    def parse(cls, text: str) -> "Viewport":
        """解析 "re_min,re_max,im_min,im_max" 形式的字符串"""
        parts = [float(p) for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"viewport needs 4 comma-separated numbers, got {text!r}")
        return cls(re_min=parts[0], re_max=parts[1], im_min=parts[2], im_max=parts[3])

    def as_tuple(self) -> tuple:
        return (self.re_min, self.re_max, self.im_min, self.im_max)


DEFAULT_VIEWPORT = Viewport(re_min=-1.5, re_max=-1.0, im_min=0.5, im_max=1.0)


class DwellGrid(BaseModel):
    """n×n 的 dwell 网格；cells 为 int32，0 表示尚未写入"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    n: int = Field(..., ge=1)
    cells: np.ndarray
    viewport: Viewport
    d_max: int = Field(..., ge=1)

    @field_validator("cells")
    @classmethod
    def _as_int32(cls, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.ndim != 2:
            raise ValueError("cells must be a 2-D array")
        return np.ascontiguousarray(v, dtype=np.int32)

    @model_validator(mode="after")
    def _check_shape(self) -> "DwellGrid":
        if self.cells.shape != (self.n, self.n):
            raise ValueError(f"cells shape {self.cells.shape} != ({self.n}, {self.n})")
        return self

    @classmethod
    def blank(cls, n: int, viewport: Viewport, d_max: int) -> "DwellGrid":
        return cls(n=n, cells=np.zeros((n, n), dtype=np.int32), viewport=viewport, d_max=d_max)

    def is_complete(self) -> bool:
        """每个像素都已写入且位于 [1, d_max]"""
        return bool(self.cells.min() >= 1 and self.cells.max() <= self.d_max)


# ============== ASK Engine ==============

class RegionOffset(BaseModel):
    """像素空间中的区域：x 为列，y 为行，均指左上角"""
    model_config = ConfigDict(frozen=True)

    x: int = Field(..., ge=0)
    y: int = Field(..., ge=0)
    side: int = Field(..., ge=1)

    def fits(self, n: int) -> bool:
        return self.x + self.side <= n and self.y + self.side <= n


class AskConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    g: int = Field(..., ge=1)
    r: int = Field(..., ge=2)
    B: int = Field(..., ge=1)
    scheme: Scheme = Scheme.SBR
    tile: int = Field(default_factory=lambda: get_settings().tile, ge=1)
    workers: int = Field(default_factory=lambda: get_settings().workers, ge=1)

    @model_validator(mode="after")
    def _check_powers(self) -> "AskConfig":
        for name in ("g", "r", "B"):
            if not is_power_of_two(getattr(self, name)):
                raise ValueError(f"{name}={getattr(self, name)} is not a power of two")
        return self

    def levels_for(self, n: int) -> Optional[int]:
        """n = g·B·r^k 时返回 k，否则 None"""
        if not is_power_of_two(n) or self.g * self.B > n or n % (self.g * self.B):
            return None
        return exact_log(n // (self.g * self.B), self.r)


class LevelStats(BaseModel):
    level: int
    regions_in: int = 0
    filled: int = 0
    subdivided: int = 0
    leaf_processed: int = 0
    q_pixels: int = 0   # 周长 dwell 计算次数
    t_pixels: int = 0   # 常数填充写入的像素
    a_pixels: int = 0   # 叶子区域逐像素 dwell 计算次数

    @model_validator(mode="after")
    def _check_partition(self) -> "LevelStats":
        if self.regions_in != self.filled + self.subdivided + self.leaf_processed:
            raise ValueError("regions_in must equal filled + subdivided + leaf_processed")
        return self


class TreeStats(BaseModel):
    """递归引擎的任务树统计"""
    spawned: int = 0        # 区域任务总数（含根部的 g² 个）
    max_depth: int = 0      # 根区域深度为 1
    per_depth: Dict[int, int] = Field(default_factory=dict)
    tile_tasks: int = 0


# ============== Optimizer ==============

class FixedParams(BaseModel):
    """扫描时固定不变的 ModelParams 字段"""
    model_config = ConfigDict(populate_by_name=True)

    n: int = Field(65536, ge=1)
    P: float = Field(0.5, ge=0.0, le=1.0)
    A: float = Field(512.0, ge=1.0)
    lam: float = Field(10.0, ge=0.0, alias="lambda")
    q: int = Field(128, ge=1)
    c: int = Field(64, ge=1)


class SweepSpec(BaseModel):
    g_set: List[int] = Field(default_factory=lambda: list(POW2_RANGE))
    r_set: List[int] = Field(default_factory=lambda: list(POW2_RANGE))
    B_set: List[int] = Field(default_factory=lambda: list(POW2_RANGE))
    objective: Objective = Objective.MIN_TIME_SBR
    fixed: FixedParams = Field(default_factory=FixedParams)

    @field_validator("g_set", "r_set", "B_set")
    @classmethod
    def _non_empty_pow2(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("candidate set must not be empty")
        bad = [x for x in v if not is_power_of_two(x)]
        if bad:
            raise ValueError(f"candidates must be powers of two: {bad}")
        return sorted(set(v))


class LandscapePoint(BaseModel):
    g: int
    r: int
    B: int
    feasible: bool
    value: Optional[float] = None

    @model_validator(mode="after")
    def _infeasible_has_no_value(self) -> "LandscapePoint":
        if not self.feasible and self.value is not None:
            raise ValueError("infeasible points carry no value")
        return self


class BestConfig(BaseModel):
    """扫描得到的最优 {g, r, B}"""
    g: int
    r: int
    B: int
    value: float
    stderr: Optional[float] = None        # 经验扫描：计时标准误 (ms)
    mismatch_ppm: Optional[float] = None  # 经验扫描：最优配置对 oracle 的不一致度

    @property
    def triple(self) -> tuple:
        return (self.g, self.r, self.B)


# ============== Bench / CLI ==============

class BenchRecord(BaseModel):
    approach: Approach
    n: int
    g: int = 0
    r: int = 0
    B: int = 0
    tile: int = 0
    workers: int
    mean_ms: float
    stderr_ms: float = Field(0.0, ge=0.0)
    reps: int = Field(..., ge=1)
    mismatch_ppm: float = 0.0

    @property
    def accepted(self) -> bool:
        return self.mismatch_ppm <= 1000


class RunManifest(BaseModel):
    command: str
    arguments: Dict[str, Any]
    settings: Dict[str, Any]
    version: str
    # 命令产出的附加结论，例如 bench 的 ASK-vs-递归 方向
    results: Dict[str, Any] = Field(default_factory=dict)
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
