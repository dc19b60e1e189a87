import logging
import sys

LOG_FORMAT = "%(levelname)s - %(asctime)s - %(name)s - %(message)s"


def force_logging(logger, level=logging.INFO):
    # Check suites report one line per identity; make those lines visible from scripts and the CLI
    if not any(getattr(h, "_pvalgebra", False) for h in logger.handlers):
        handler = logging.StreamHandler(sys.stdout)
        handler._pvalgebra = True
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)
    for handler in logger.handlers:
        if getattr(handler, "_pvalgebra", False):
            handler.setLevel(level)
    logger.setLevel(level)
    return logger
