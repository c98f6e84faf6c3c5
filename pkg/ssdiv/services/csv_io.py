"""CSV 输出 / 读取与运行清单

所有 CSV：逗号分隔、'.' 小数点、总是带表头、UTF-8、LF 换行。
"""

import csv
import math
import sys
from enum import Enum
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, TextIO, Union

from ssdiv.core.errors import LandscapeError
from ssdiv.models.schemas import (
    BenchRecord, CostReport, LandscapePoint, LevelStats, ModelParams, RunManifest,
)

PathLike = Union[str, Path]

# ============== Headers ==============

MODEL_HEADER = [
    "n", "g", "r", "B", "P", "A", "lambda", "q", "c",
    "W_E", "W_SSD", "Omega", "T_Ex", "T_SBR", "T_MBR", "S_SBR", "S_MBR",
]
MODEL_MC_COLUMNS = ["W_MC", "W_MC_stderr"]
STATS_HEADER = ["level", "regions_in", "filled", "subdivided", "leaf_processed", "q_pixels", "t_pixels", "a_pixels"]
BENCH_HEADER = ["approach", "n", "g", "r", "B", "tile", "workers", "mean_ms", "stderr_ms", "reps", "mismatch_ppm"]
LANDSCAPE_HEADER = ["g", "r", "B", "feasible", "value"]


def fmt(value) -> str:
    """数值格式化：整数值按整数写，其余用 repr 保证可逆"""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isfinite(value) and value.is_integer() and abs(value) < 2 ** 63:
            return str(int(value))
        return repr(value)
    return str(value)


def write_rows(header: Sequence[str], rows: Iterable[Sequence], out: Optional[PathLike] = None) -> None:
    """写到文件；out 为 None 或 "-" 时写到标准输出"""
    if out is None or str(out) == "-":
        _write(sys.stdout, header, rows)
        sys.stdout.flush()
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        _write(f, header, rows)


def _write(stream: TextIO, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


# ============== Row builders ==============

def model_row(params: ModelParams, report: CostReport) -> List:
    return [
        params.n, params.g, params.r, params.B, params.P, params.A, params.lam, params.q, params.c,
        report.W_E, report.W_total, report.omega,
        report.T_ex, report.T_sbr, report.T_mbr, report.S_sbr, report.S_mbr,
    ]


def stats_row(stats: LevelStats) -> List:
    return [getattr(stats, name) for name in STATS_HEADER]


def bench_row(record: BenchRecord) -> List:
    return [getattr(record, name) for name in BENCH_HEADER]


def landscape_row(point: LandscapePoint) -> List:
    return [point.g, point.r, point.B, point.feasible, point.value]


# ============== Readers ==============

def read_landscape(path: PathLike) -> List[LandscapePoint]:
    path = Path(path)
    if not path.is_file():
        raise LandscapeError(f"landscape file not found: {path}")
    points = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or list(reader.fieldnames) != LANDSCAPE_HEADER:
            raise LandscapeError(f"{path}: expected header {','.join(LANDSCAPE_HEADER)}")
        for row in reader:
            feasible = row["feasible"].strip().lower() in ("true", "1")
            points.append(LandscapePoint(
                g=int(row["g"]), r=int(row["r"]), B=int(row["B"]),
                feasible=feasible,
                value=float(row["value"]) if feasible and row["value"] else None,
            ))
    return points


def best_from_landscape(points: Iterable[LandscapePoint]) -> LandscapePoint:
    """最小值的可行点，平局按 (g, r, B) 字典序"""
    feasible = [p for p in points if p.feasible and p.value is not None]
    if not feasible:
        raise LandscapeError("landscape has no feasible point")
    return min(feasible, key=lambda p: (p.value, p.g, p.r, p.B))


# ============== Manifest ==============

def write_manifest(path: PathLike, manifest: RunManifest) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    return path
