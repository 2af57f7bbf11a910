# sov6v/logs.py
import logging
import os

from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler

console = Console()

_HANDLER_NAME = "sov6v-rich"


def setup_logging(level: str | int | None = None) -> None:
    """Attach a single RichHandler to the package logger (idempotent)."""
    load_dotenv()
    if level is None:
        level = os.getenv("SOV6V_LOG_LEVEL", "WARNING")
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.WARNING

    root = logging.getLogger("sov6v")
    root.setLevel(level)
    if any(h.get_name() == _HANDLER_NAME for h in root.handlers):
        return
    handler = RichHandler(console=console, show_path=False, rich_tracebacks=True)
    handler.set_name(_HANDLER_NAME)
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
    root.addHandler(handler)
