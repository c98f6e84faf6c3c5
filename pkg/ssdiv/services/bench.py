"""计时与基准测试

计时只覆盖完整的渲染循环：先跑一次预热（丢弃），再跑 reps 次取均值和标准误。
每个细分方法的结果都与穷举 oracle 比对，记录 mismatch_ppm。
"""

import logging
import math
import time
from typing import Callable, Dict, Iterable, List, NamedTuple, Optional

import numpy as np

from ssdiv.core.ask_engine import ask_render
from ssdiv.core.fractal import exhaustive_render
from ssdiv.core.recursive_engine import recursive_render
from ssdiv.models.schemas import Approach, AskConfig, BenchRecord, DwellGrid, Engine, Scheme, Viewport
from ssdiv.services.pgm import mismatch_ppm

logger = logging.getLogger(__name__)

# 超过这个 ppm 的渲染视为与 oracle 不一致
MISMATCH_GATE_PPM = 1000


class Timing(NamedTuple):
    mean_ms: float
    stderr_ms: float
    reps: int
    result: object


def measure(fn: Callable[[], object], reps: int, warmup: int = 1) -> Timing:
    """单调时钟计时，返回均值、标准误和最后一次的结果"""
    if reps < 1:
        raise ValueError(f"reps must be >= 1 (got {reps})")
    result = None
    for _ in range(warmup):
        result = fn()
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter()
        result = fn()
        samples.append((time.perf_counter() - t0) * 1000.0)
    arr = np.asarray(samples)
    stderr = float(arr.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    return Timing(float(arr.mean()), stderr, reps, result)


def render_with(engine: Engine, n: int, vp: Viewport, d_max: int, config: AskConfig) -> DwellGrid:
    if engine is Engine.ASK:
        return ask_render(n, vp, d_max, config)[0]
    return recursive_render(n, vp, d_max, config)[0]


def run_approach(approach: Approach, n: int, vp: Viewport, d_max: int,
                 config: Optional[AskConfig], workers: int) -> DwellGrid:
    if approach is Approach.EX:
        return exhaustive_render(n, vp, d_max, workers)
    cfg = config.model_copy(update={"scheme": approach.scheme, "workers": workers})
    return render_with(approach.engine, n, vp, d_max, cfg)


def bench_cell(
    approach: Approach,
    n: int,
    vp: Viewport,
    d_max: int,
    config: Optional[AskConfig],
    workers: int,
    reps: int,
    oracle: Optional[DwellGrid] = None,
) -> BenchRecord:
    """测量一个 (方法, n, 配置) 组合"""
    timing = measure(lambda: run_approach(approach, n, vp, d_max, config, workers), reps)
    ppm = 0.0
    if approach is not Approach.EX and oracle is not None:
        ppm = mismatch_ppm(timing.result.cells, oracle.cells)
    if approach is Approach.EX or config is None:
        g = r = B = tile = 0
    else:
        g, r, B, tile = config.g, config.r, config.B, config.tile
    record = BenchRecord(
        approach=approach, n=n, g=g, r=r, B=B, tile=tile, workers=workers,
        mean_ms=timing.mean_ms, stderr_ms=timing.stderr_ms, reps=reps, mismatch_ppm=ppm,
    )
    logger.info(
        "🔧 %s n=%d g=%d r=%d B=%d: %.2f ± %.2f ms, mismatch %.1f ppm",
        approach.value, n, g, r, B, record.mean_ms, record.stderr_ms, ppm,
    )
    if not record.accepted:
        logger.error("❌ %s n=%d exceeds the %d ppm mismatch gate (%.1f ppm)",
                     approach.value, n, MISMATCH_GATE_PPM, ppm)
    return record


class BenchRun(NamedTuple):
    records: List[BenchRecord]
    # n -> {"ASK_SBR": ASK 是否不慢于 REC_SBR, ...}，只含两者都跑过的组合
    ask_vs_recursive: Dict[int, Dict[str, bool]]


def run_bench(
    approaches: Iterable[Approach],
    ns: Iterable[int],
    vp: Viewport,
    d_max: int,
    config_for: Callable[[int], Optional[AskConfig]],
    workers: int,
    reps: int,
) -> BenchRun:
    """对每个 n 依次测量所有方法；每个 n 只算一次 oracle"""
    approaches = list(approaches)
    records: List[BenchRecord] = []
    directions: Dict[int, Dict[str, bool]] = {}
    for n in ns:
        config = config_for(n)
        oracle = exhaustive_render(n, vp, d_max, workers)
        for approach in approaches:
            records.append(bench_cell(approach, n, vp, d_max, config, workers, reps, oracle))
        verdicts = ask_vs_recursive(records, n)
        if verdicts:
            directions[n] = verdicts
    return BenchRun(records, directions)


def ask_vs_recursive(records: List[BenchRecord], n: int) -> Dict[str, bool]:
    """ASK 是否不慢于对应的递归版本；慢了只告警，不判失败"""
    by_approach = {rec.approach: rec for rec in records if rec.n == n}
    verdicts: Dict[str, bool] = {}
    for scheme in Scheme:
        ask, rec = Approach.of(Engine.ASK, scheme), Approach.of(Engine.RECURSIVE, scheme)
        if ask in by_approach and rec in by_approach:
            faster = by_approach[ask].mean_ms <= by_approach[rec].mean_ms
            verdicts[ask.value] = faster
            if faster:
                logger.info("%s <= %s at n=%d", ask.value, rec.value, n)
            else:
                logger.warning("⚠️ %s slower than %s at n=%d (task-spawn overhead differs from GPU launches)",
                               ask.value, rec.value, n)
    return verdicts
