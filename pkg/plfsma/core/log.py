import logging

from plfsma.core import settings
from plfsma.core.errors import ConfigurationError


def configure_logging(level: str | int | None = None) -> None:
    """Install one stream handler on the package logger.

    Args:
        level: Logging level name or number. Defaults to ``PLFSMA_LOG_LEVEL``.
    """
    root = logging.getLogger("plfsma")
    level = level or settings.LOG_LEVEL
    try:
        root.setLevel(level.upper() if isinstance(level, str) else level)
    except ValueError:
        raise ConfigurationError(f"unknown log level {level!r}") from None
    if not root.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(settings.LOG_FORMAT))
        root.addHandler(handler)
    root.propagate = False
