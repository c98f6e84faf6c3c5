import os

import pytest

from ssdiv.config import get_settings
from ssdiv.core.fractal import exhaustive_render
from ssdiv.models.schemas import DEFAULT_VIEWPORT, ModelParams, Viewport

# 全部落在主心形区内：dwell 恒为 d_max
INTERIOR = Viewport(re_min=-0.1, re_max=0.1, im_min=-0.1, im_max=0.1)
# |c| > 2：第一次迭代就逃逸，dwell 恒为 1
ESCAPE = Viewport(re_min=10.0, re_max=11.0, im_min=10.0, im_max=11.0)
# 整个集合
FULL = Viewport(re_min=-2.0, re_max=1.0, im_min=-1.5, im_max=1.5)

DWELL = 512


@pytest.fixture(autouse=True)
def _fresh_settings(monkeypatch):
    monkeypatch.delenv("SSDIV_WORKERS", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def mandel_params() -> ModelParams:
    return ModelParams(n=4096, g=16, r=2, B=32, P=0.5, A=512, lam=10, q=128, c=64)


@pytest.fixture(scope="session")
def workers() -> int:
    return min(4, os.cpu_count() or 1)


@pytest.fixture(scope="session")
def oracle_512(workers):
    return exhaustive_render(512, DEFAULT_VIEWPORT, DWELL, workers)


@pytest.fixture(scope="session")
def oracle_2048(workers):
    return exhaustive_render(2048, DEFAULT_VIEWPORT, DWELL, workers)
