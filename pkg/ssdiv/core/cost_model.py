"""细分代价模型

闭式表达式：穷举工作量、一般细分工作量、SSD/Mandelbrot 实例化、
工作量缩减因子 Ω、两级机器模型下的 Ex/SBR/MBR 并行时间与加速比。
另附一个 Monte-Carlo 细分树模拟器作为上述公式的 oracle。

约定：
- τ 为细分层数，层 0..τ-2 做周长查询，层 τ-1 为最后一层（逐元素 A 工作量）
- G = g², R = r²
- Q, S, T 可以是常数，也可以是层号 i 的函数
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np

from ssdiv.core.errors import ConfigError, ProbProfileError
from ssdiv.models.schemas import CostReport, ModelParams, ProbProfile, SimulationResult, exact_log

logger = logging.getLogger(__name__)

LevelTerm = Union[float, Callable[[int], float]]

# Monte-Carlo 每个块的 trial 数；块边界固定，保证结果与线程数无关
MC_BLOCK = 4096


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def _as_level_fn(term: LevelTerm) -> Callable[[int], float]:
    if callable(term):
        return term
    value = float(term)
    return lambda i: value


def _as_probs(probs: Union[ProbProfile, Sequence[float]]) -> List[float]:
    if isinstance(probs, ProbProfile):
        return list(probs.per_level)
    return list(ProbProfile(per_level=list(probs)).per_level)


# ============== Work ==============

def depth_tau(params: ModelParams) -> int:
    """细分层数 τ = log_r(n/(gB))，最小为 1

    Args:
        params: 模型参数

    Returns:
        层数 τ（整数）
    """
    gB = params.g * params.B
    if gB > params.n:
        raise ConfigError(f"g*B = {gB} exceeds n = {params.n}: no valid depth")
    k = exact_log(params.n // gB, params.r) if params.n % gB == 0 else None
    if k is None:
        raise ConfigError(f"n/(g*B) is not an integer power of r={params.r}")
    return max(k, 1)


def exhaustive_work(n: int, A: float) -> float:
    """W_E = n²·A"""
    if n < 1 or A < 1:
        raise ConfigError(f"exhaustive work needs n >= 1 and A >= 1 (got n={n}, A={A})")
    return float(n * n) * A


def _level_works(
    params: ModelParams,
    tau: int,
    probs: List[float],
    Q: Callable[[int], float],
    S: Callable[[int], float],
    T: Callable[[int], float],
) -> Tuple[List[float], float]:
    """逐层 K_i 与最后一层 L，ssd_work 和一般形式共用这一条求值路径"""
    G, R = params.G, params.R
    survive = 1.0
    per_level: List[float] = []
    for i in range(tau - 1):
        p = probs[i]
        q_i = Q(i)
        U = p * (q_i + S(i)) + (1.0 - p) * (q_i + T(i))
        per_level.append(U * G * R ** i * survive)
        survive *= p
    L = float(params.n * params.n) * params.A * survive
    return per_level, L


def general_subdivision_work(
    params: ModelParams,
    probs: Union[ProbProfile, Sequence[float]],
    Q: LevelTerm,
    S: LevelTerm,
    T: LevelTerm,
) -> float:
    """一般细分工作量：Σ U_i·G·Rⁱ·Π_{j<i}P_j + n²A·Π_{j≤τ-2}P_j

    Args:
        params: 模型参数（只用到 n, g, r, B, A）
        probs: 每层细分概率，长度必须为 τ-1
        Q: 每个区域的查询工作量
        S: 每个区域的细分工作量
        T: 每个区域的终止（填充）工作量

    Returns:
        总工作量
    """
    tau = depth_tau(params)
    plist = _as_probs(probs)
    if len(plist) != tau - 1:
        raise ProbProfileError(f"probability profile has {len(plist)} entries, expected tau-1 = {tau - 1}")
    for name, term in (("Q", Q), ("S", S), ("T", T)):
        if not callable(term) and term < 0:
            raise ConfigError(f"{name} must be >= 0 (got {term})")
    per_level, L = _level_works(params, tau, plist, _as_level_fn(Q), _as_level_fn(S), _as_level_fn(T))
    return sum(per_level) + L


def mandelbrot_terms(params: ModelParams) -> Tuple[Callable[[int], float], Callable[[int], float], Callable[[int], float]]:
    """Mandelbrot 实例化的 (Q_i, S, T_i)

    Q_i = 4nA/(g·rⁱ)  周长上的 dwell 计算
    S   = λA          细分开销
    T_i = n²/(G·Rⁱ)   对整个区域写常数
    """
    n, g, r, A = params.n, params.g, params.r, params.A
    G, R = params.G, params.R
    subdiv = params.lam * A

    def Q(i: int) -> float:
        return 4.0 * n * A / (g * r ** i)

    def S(i: int) -> float:
        return subdiv

    def T(i: int) -> float:
        return float(n * n) / (G * R ** i)

    return Q, S, T


def ssd_work(params: ModelParams) -> CostReport:
    """SSD 假设下 Mandelbrot 的细分工作量（只填工作量字段）"""
    tau = depth_tau(params)
    Q, S, T = mandelbrot_terms(params)
    per_level, L = _level_works(params, tau, [params.P] * (tau - 1), Q, S, T)
    W_total = sum(per_level) + L
    W_E = exhaustive_work(params.n, params.A)
    return CostReport(
        tau=tau,
        per_level_K=per_level,
        L=L,
        W_total=W_total,
        W_E=W_E,
        omega=W_E / W_total,
    )


def work_reduction_factor(params: ModelParams) -> float:
    """Ω = W_E / W_SSD"""
    return ssd_work(params).omega


def expected_regions(params: ModelParams, level: int) -> float:
    """第 level 层的期望活跃区域数 G·(R·P)^level"""
    return params.G * (params.R * params.P) ** level


# ============== Parallel time ==============

def exhaustive_time(params: ModelParams) -> float:
    """T_Ex = ⌈n²/(qc)⌉·A"""
    return _ceil_div(params.n * params.n, params.q * params.c) * params.A


def sbr_time(params: ModelParams) -> float:
    """每个区域由一个 c 核的 block 处理"""
    tau = depth_tau(params)
    n, g, r, c, q = params.n, params.g, params.r, params.c, params.q
    G, R, A, P = params.G, params.R, params.A, params.P
    total = 0.0
    for i in range(tau - 1):
        regions = G * R ** i
        per_region = (
            _ceil_div(4 * n, g * r ** i * c) * A
            + P * params.lam * A
            + (1.0 - P) * _ceil_div(n * n, regions * c)
        )
        total += per_region * _ceil_div(regions, q) * P ** i
    last = G * R ** (tau - 1)
    total += A * _ceil_div(n * n, last * c) * _ceil_div(last, q) * P ** (tau - 1)
    return total


def mbr_time(params: ModelParams) -> float:
    """填充与最后一层按多 block 映射，周长与细分仍按 SBR"""
    tau = depth_tau(params)
    n, g, r, c, q = params.n, params.g, params.r, params.c, params.q
    G, R, A, P = params.G, params.R, params.A, params.P
    S = params.lam * A
    total = 0.0
    for i in range(tau - 1):
        blocks = _ceil_div(G * R ** i, q)
        total += _ceil_div(4 * n, g * r ** i * c) * blocks * A * P ** i
        total += blocks * S * P ** (i + 1)
        total += math.ceil(n * n * P ** i * (1.0 - P) / (q * c))
    total += A * _ceil_div(n * n, q * c) * P ** (tau - 1)
    return total


def speedups(params: ModelParams) -> Tuple[float, float]:
    """(S_SBR, S_MBR)，相对穷举的加速比"""
    t_ex = exhaustive_time(params)
    return t_ex / sbr_time(params), t_ex / mbr_time(params)


def cost_report(params: ModelParams) -> CostReport:
    """一次算出工作量、三种时间与两个加速比"""
    report = ssd_work(params)
    t_ex, t_sbr, t_mbr = exhaustive_time(params), sbr_time(params), mbr_time(params)
    return report.model_copy(update={
        "T_ex": t_ex,
        "T_sbr": t_sbr,
        "T_mbr": t_mbr,
        "S_sbr": t_ex / t_sbr,
        "S_mbr": t_ex / t_mbr,
    })


# ============== Monte-Carlo oracle ==============

def _simulate_block(
    rng: np.random.Generator,
    size: int,
    params: ModelParams,
    tau: int,
    probs: List[float],
    Q: Callable[[int], float],
    S: Callable[[int], float],
    T: Callable[[int], float],
) -> np.ndarray:
    """模拟 size 棵细分树，返回每棵树的总工作量"""
    totals = np.zeros(size, dtype=np.float64)
    regions = np.full(size, params.G, dtype=np.int64)
    for i in range(tau - 1):
        split = rng.binomial(regions, probs[i])
        totals += regions * Q(i) + split * S(i) + (regions - split) * T(i)
        regions = split * params.R
    elements = (params.n * params.n) // (params.G * params.R ** (tau - 1))
    totals += regions * float(elements) * params.A
    return totals


def simulate_general_work(
    params: ModelParams,
    probs: Union[ProbProfile, Sequence[float]],
    Q: LevelTerm,
    S: LevelTerm,
    T: LevelTerm,
    trials: int,
    seed: int,
    workers: int = 1,
) -> SimulationResult:
    """一般形式的 Monte-Carlo oracle

    每层每个区域以概率 P_i 独立细分（记 Q+S）或终止（记 Q+T），
    存活到最后一层的区域按元素数记 A 工作量。
    trial 按固定大小分块，每块一条 Philox 流（SeedSequence.spawn），
    因此同一 seed 的结果与 workers 无关。
    """
    if trials < 1:
        raise ConfigError(f"trials must be >= 1 (got {trials})")
    tau = depth_tau(params)
    plist = _as_probs(probs)
    if len(plist) != tau - 1:
        raise ProbProfileError(f"probability profile has {len(plist)} entries, expected tau-1 = {tau - 1}")
    q_fn, s_fn, t_fn = _as_level_fn(Q), _as_level_fn(S), _as_level_fn(T)

    sizes = [MC_BLOCK] * (trials // MC_BLOCK)
    if trials % MC_BLOCK:
        sizes.append(trials % MC_BLOCK)
    children = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(idx: int) -> np.ndarray:
        rng = np.random.Generator(np.random.Philox(children[idx]))
        return _simulate_block(rng, sizes[idx], params, tau, plist, q_fn, s_fn, t_fn)

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(run, range(len(sizes))))
    else:
        blocks = [run(i) for i in range(len(sizes))]

    totals = np.concatenate(blocks)
    mean = float(totals.mean())
    stderr = float(totals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    logger.debug("MC oracle: %d trials, mean=%.6g, stderr=%.3g", trials, mean, stderr)
    return SimulationResult(mean=mean, stderr=stderr, trials=trials)


def simulate_subdivision_work(params: ModelParams, trials: int, seed: int, workers: int = 1) -> SimulationResult:
    """ssd_work 的 Monte-Carlo oracle（常数 P + Mandelbrot 的 Q/S/T）"""
    tau = depth_tau(params)
    Q, S, T = mandelbrot_terms(params)
    return simulate_general_work(
        params, [params.P] * (tau - 1), Q, S, T, trials=trials, seed=seed, workers=workers
    )
