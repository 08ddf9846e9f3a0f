import logging
from concurrent.futures import ProcessPoolExecutor

from plfsma.core import settings

logger = logging.getLogger(__name__)


def map_ordered(function, argument_lists, threads: int | None = None) -> list:
    """``map(function, *argument_lists)`` over a process pool, results in input order.

    ``threads`` falls back to ``PLFSMA_THREADS``; one thread runs serially in
    the calling process.
    """
    threads = threads or settings.THREADS
    if threads <= 1:
        return [function(*arguments) for arguments in zip(*argument_lists)]
    logger.debug("dispatching %s to %d workers", function.__name__, threads)
    with ProcessPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(function, *argument_lists))
