"""
Logging configuration
"""
import logging
import sys
from pathlib import Path
from camforge.core.config import settings

# Configure logging format
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

# Create logger
logger = logging.getLogger("camforge")
logger.setLevel(settings.LOG_LEVEL)

# Console handler (stderr, stdout carries command output)
console_handler = logging.StreamHandler(sys.stderr)
console_formatter = logging.Formatter(LOG_FORMAT, DATE_FORMAT)
console_handler.setFormatter(console_formatter)
logger.addHandler(console_handler)

# File handler, only when configured
if settings.LOG_FILE:
    log_path = Path(settings.LOG_FILE)
    log_path.parent.mkdir(parents=True, exist_ok=True)
    file_handler = logging.FileHandler(log_path)
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT, DATE_FORMAT))
    logger.addHandler(file_handler)


def set_level(level: str) -> None:
    """
    Change the log level of the camforge logger tree

    Args:
        level: Level name (DEBUG, INFO, WARNING, ERROR)
    """
    logger.setLevel(level.upper())


def get_logger(name: str = None) -> logging.Logger:
    """
    Get a logger instance

    Args:
        name: Logger name (optional)

    Returns:
        logging.Logger: Configured logger
    """
    if name:
        if name.startswith("camforge"):
            return logging.getLogger(name)
        return logging.getLogger(f"camforge.{name}")
    return logger
