"""{g, r, B} 配置空间的穷举扫描

模型扫描直接对代价模型求值；经验扫描对每个可行配置实际渲染计时。
不可行的组合（g·B > n 或不能精确铺满）只记录、不报错。
最优解按目标值最小、平局取 (g, r, B) 字典序最小。
"""

import logging
from itertools import product
from typing import Callable, Dict, List, Optional, Tuple

from ssdiv.core.cost_model import mbr_time, sbr_time, ssd_work
from ssdiv.core.errors import ConfigError, LandscapeError
from ssdiv.core.fractal import exhaustive_render
from ssdiv.models.schemas import (
    AskConfig, BestConfig, Engine, LandscapePoint, ModelParams, Objective, Scheme, SweepSpec, Viewport,
    exact_log, is_power_of_two,
)
from ssdiv.services.bench import measure, render_with
from ssdiv.services.pgm import mismatch_ppm

logger = logging.getLogger(__name__)

MODEL_OBJECTIVES: Dict[Objective, Callable[[ModelParams], float]] = {
    Objective.MIN_WORK: lambda p: ssd_work(p).W_total,
    Objective.MIN_TIME_SBR: sbr_time,
    Objective.MIN_TIME_MBR: mbr_time,
}


def is_feasible(n: int, g: int, r: int, B: int) -> bool:
    """g·B ≤ n 且 n = g·B·r^k（k ≥ 0 为整数）"""
    if not is_power_of_two(n) or g * B > n or n % (g * B):
        return False
    return exact_log(n // (g * B), r) is not None


def _triples(sweep: SweepSpec):
    return product(sweep.g_set, sweep.r_set, sweep.B_set)


def _pick_best(landscape: List[LandscapePoint]) -> LandscapePoint:
    best: Optional[LandscapePoint] = None
    # 按字典序遍历，严格小于才替换，平局保留字典序最小者
    for point in sorted(landscape, key=lambda p: (p.g, p.r, p.B)):
        if point.feasible and (best is None or point.value < best.value):
            best = point
    if best is None:
        raise LandscapeError("no feasible {g, r, B} triple in the sweep")
    return best


def grid_search_model(sweep: SweepSpec) -> Tuple[BestConfig, List[LandscapePoint]]:
    """对代价模型穷举扫描

    Returns:
        (最优配置, 所有点的 landscape)
    """
    if sweep.objective not in MODEL_OBJECTIVES:
        raise ConfigError(f"objective {sweep.objective.value} needs an empirical sweep")
    objective = MODEL_OBJECTIVES[sweep.objective]
    fixed = sweep.fixed
    landscape: List[LandscapePoint] = []
    for g, r, B in _triples(sweep):
        if not is_feasible(fixed.n, g, r, B):
            landscape.append(LandscapePoint(g=g, r=r, B=B, feasible=False))
            continue
        params = ModelParams(n=fixed.n, g=g, r=r, B=B, P=fixed.P, A=fixed.A, lam=fixed.lam, q=fixed.q, c=fixed.c)
        landscape.append(LandscapePoint(g=g, r=r, B=B, feasible=True, value=objective(params)))
    best = _pick_best(landscape)
    logger.debug("model sweep %s n=%d: best (%d, %d, %d) = %g",
                 sweep.objective.value, fixed.n, best.g, best.r, best.B, best.value)
    return BestConfig(g=best.g, r=best.r, B=best.B, value=best.value), landscape


def grid_search_empirical(
    sweep: SweepSpec,
    engine: Engine,
    scheme: Scheme,
    n: int,
    vp: Viewport,
    d_max: int,
    reps: int,
    workers: int = 1,
    tile: int = 16,
    check_oracle: bool = True,
) -> Tuple[BestConfig, List[LandscapePoint]]:
    """对每个可行配置实际渲染计时（预热一次 + reps 次取均值），返回最快的

    配置严格串行地测量；每次渲染内部使用自己的线程池。
    check_oracle 时，最优配置再渲染一次并与穷举结果比对。
    """
    if reps < 1:
        raise ConfigError(f"reps must be >= 1 (got {reps})")
    landscape: List[LandscapePoint] = []
    stderr: Dict[Tuple[int, int, int], float] = {}
    for g, r, B in _triples(sweep):
        if not is_feasible(n, g, r, B):
            landscape.append(LandscapePoint(g=g, r=r, B=B, feasible=False))
            continue
        config = AskConfig(g=g, r=r, B=B, scheme=scheme, tile=tile, workers=workers)
        timing = measure(lambda: render_with(engine, n, vp, d_max, config), reps)
        stderr[(g, r, B)] = timing.stderr_ms
        landscape.append(LandscapePoint(g=g, r=r, B=B, feasible=True, value=timing.mean_ms))
        logger.info("sweep %s-%s n=%d (%d, %d, %d): %.2f ms", engine.value, scheme.value, n, g, r, B, timing.mean_ms)

    best = _pick_best(landscape)
    ppm = None
    if check_oracle:
        config = AskConfig(g=best.g, r=best.r, B=best.B, scheme=scheme, tile=tile, workers=workers)
        oracle = exhaustive_render(n, vp, d_max, workers)
        ppm = mismatch_ppm(render_with(engine, n, vp, d_max, config).cells, oracle.cells)
        if ppm > 1000:
            logger.error("❌ best config (%d, %d, %d) disagrees with the oracle: %.1f ppm", best.g, best.r, best.B, ppm)
    return BestConfig(
        g=best.g, r=best.r, B=best.B, value=best.value,
        stderr=stderr[(best.g, best.r, best.B)], mismatch_ppm=ppm,
    ), landscape
