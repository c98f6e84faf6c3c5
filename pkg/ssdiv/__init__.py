"""ssdiv: 细分代价模型 + Mandelbrot ASK 参考渲染器"""

__version__ = "0.1.0"
