import logging

from rich.console import Console
from rich.logging import RichHandler

# stdout 只留给 CSV / 报告，日志一律走 stderr
err_console = Console(stderr=True)


def setup_logging(level: str = "INFO") -> None:
    """为 ssdiv 的 logger 安装 RichHandler（重复调用只更新级别）"""
    root = logging.getLogger("ssdiv")
    root.setLevel(level.upper())
    if not any(isinstance(h, RichHandler) for h in root.handlers):
        handler = RichHandler(console=err_console, show_path=False, rich_tracebacks=True)
        handler.setFormatter(logging.Formatter("%(message)s", datefmt="[%X]"))
        root.addHandler(handler)
