from pathlib import Path
import sys

from loguru import logger


def setup_logging(logs_dir: str = "logs", level: str = "INFO"):
    """
    Configure the Loguru logger: stderr at the requested level plus a rotating debug file.
    """
    logger.remove()
    logger.add(sys.stderr, level=level)
    logger.add(
        Path(logs_dir) / "crn_relay.log",
        rotation="10 MB",
        retention="10 days",
        compression="zip",
        level="DEBUG",
        format="{time:YYYY-MM-DD at HH:mm:ss} | {level} | {name}:{function}:{line} | {message}",
        enqueue=True,
    )
