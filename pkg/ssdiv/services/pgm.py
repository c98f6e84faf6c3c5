"""PGM (P5, maxval 255) 读写与图像比对"""

from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image, UnidentifiedImageError

from ssdiv.core.errors import ImageFormatError
from ssdiv.models.schemas import DwellGrid

PathLike = Union[str, Path]


def gray_from_dwell(cells: np.ndarray, d_max: int) -> np.ndarray:
    """gray = round(255·d/d_max)，半数向上取整，整数运算"""
    d = np.asarray(cells, dtype=np.int64)
    return ((510 * d + d_max) // (2 * d_max)).astype(np.uint8)


def write_pgm(path: PathLike, grid: DwellGrid) -> Path:
    """按行主序（上到下）写出二进制 PGM"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    img = Image.fromarray(gray_from_dwell(grid.cells, grid.d_max))
    img.save(path, format="PPM")
    return path


def read_pgm(path: PathLike) -> np.ndarray:
    """读回 8 位灰度矩阵 (rows, cols)"""
    try:
        with Image.open(path) as img:
            if img.format != "PPM" or img.mode != "L":
                raise ImageFormatError(f"{path}: expected an 8-bit PGM, got {img.format}/{img.mode}")
            return np.asarray(img, dtype=np.uint8).copy()
    except (UnidentifiedImageError, OSError) as e:
        raise ImageFormatError(f"{path}: cannot read PGM: {e}") from e


def mismatch_count(a: np.ndarray, b: np.ndarray) -> int:
    if a.shape != b.shape:
        raise ImageFormatError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


def mismatch_ppm(a: np.ndarray, b: np.ndarray) -> float:
    """不同像素所占比例，单位 ppm"""
    total = a.size
    if total == 0:
        return 0.0
    return mismatch_count(a, b) * 1_000_000 / total
