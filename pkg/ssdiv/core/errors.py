"""ssdiv 异常层级

所有库代码抛出的业务异常都继承 SsdivError，CLI 根据类型映射退出码。
"""


class SsdivError(Exception):
    """Base class for every error raised by ssdiv."""


class ConfigError(SsdivError, ValueError):
    """参数非法，或 {g, r, B} 无法精确铺满 n×n 域"""


class ProbProfileError(ConfigError):
    """逐层概率表长度与 τ 不符，或概率越界"""


class RegionError(SsdivError, ValueError):
    """区域为空、越界，或 OLT 中混入了不同边长的区域"""


class OLTCapacityError(SsdivError, RuntimeError):
    """预留槽位超出 write-OLT 容量（编程错误，容量应当预先算好）"""


class LinearizeError(SsdivError, IndexError):
    """线性化坐标或标量越界"""


class ImageFormatError(SsdivError, ValueError):
    """PGM 文件格式错误或两幅图尺寸不一致"""


class LandscapeError(SsdivError):
    """landscape CSV 缺失、为空，或没有可行点"""
