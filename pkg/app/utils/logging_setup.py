import logging
from typing import Optional

from rich.console import Console
from rich.logging import RichHandler

console = Console(stderr=True)


def configure_logging(level: Optional[str] = None) -> None:
    """Route log records through a rich console handler on stderr."""
    logging.basicConfig(
        level=(level or "INFO").upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=True, show_path=False)],
        force=True,
    )
