"""生成 golden PGM：n=512，默认视窗 [-1.5,-1]×[0.5,1]，dwell 512，穷举渲染

用法: python scripts/make_golden.py [输出路径]
"""

import sys
from pathlib import Path

from ssdiv.config import get_settings
from ssdiv.core.fractal import exhaustive_render
from ssdiv.models.schemas import DEFAULT_VIEWPORT
from ssdiv.services.pgm import read_pgm, write_pgm

GOLDEN_N = 512
GOLDEN_DWELL = 512
DEFAULT_OUT = Path(__file__).resolve().parent.parent / "tests" / "golden" / "viewport_512_d512.pgm"


def make_golden(out: Path) -> Path:
    grid = exhaustive_render(GOLDEN_N, DEFAULT_VIEWPORT, GOLDEN_DWELL, get_settings().workers)
    write_pgm(out, grid)
    # 写完读回一次，确认文件可用
    gray = read_pgm(out)
    assert gray.shape == (GOLDEN_N, GOLDEN_N)
    return out


if __name__ == "__main__":
    target = Path(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT_OUT
    path = make_golden(target)
    print(f"✅ golden image written: {path}")
    print(f"   n={GOLDEN_N}, dwell={GOLDEN_DWELL}, viewport={DEFAULT_VIEWPORT.as_tuple()}")
