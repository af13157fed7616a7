# logger.py
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path

from core import LOG_DIR, LOG_LEVEL

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def setup_logger(name: str = "ccdfg") -> logging.Logger:
    """
    Configure a logger with a rotating log file and a console handler.

    The console handler writes to stderr: stdout carries command results and
    must stay byte-identical between identical invocations.

    Args:
        name: Logger name (default 'ccdfg').

    Returns:
        logging.Logger: configured logger.
    """
    logger = logging.getLogger(name)
    logger.setLevel(LOG_LEVEL)

    # Avoid duplicated handlers on re-import
    if logger.handlers:
        return logger

    formatter = logging.Formatter(LOG_FORMAT, DATE_FORMAT)

    log_dir = Path(LOG_DIR)
    log_dir.mkdir(parents=True, exist_ok=True)

    # 5 MB x 3 files
    file_handler = RotatingFileHandler(
        log_dir / "ccdfg.log",
        maxBytes=5 * 1024 * 1024,
        backupCount=3,
        encoding="utf-8",
    )
    file_handler.setFormatter(formatter)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)

    logger.addHandler(file_handler)
    logger.addHandler(console_handler)
    logger.propagate = False

    return logger


logger = setup_logger()
