import logging
import sys

from plfsma.cli.parser import build_parser
from plfsma.core.errors import EXIT_NUMERICAL, PlfsmaException
from plfsma.core.log import configure_logging

logger = logging.getLogger(__name__)


def main(argv=None) -> int:
    """Parse ``argv``, run the sub-command and map exceptions to exit codes.

    Flag errors caught by argparse exit with status 2 directly. Errors not
    raised by the package itself count as numerical failures.
    """
    args = build_parser().parse_args(argv)
    try:
        configure_logging(args.log_level)
        logger.info("%s started", args.command)
        status = args.handler(args)
    except PlfsmaException as exc:
        logger.error("%s failed: %s", args.command, exc)
        return exc.exit_code
    except Exception:
        logger.exception("%s failed unexpectedly", args.command)
        return EXIT_NUMERICAL
    logger.info("%s finished", args.command)
    return status


if __name__ == "__main__":
    sys.exit(main())
