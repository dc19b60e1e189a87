import logging

from pvalgebra.utils.log import force_logging


def test_single_handler():
    logger = logging.getLogger("pvalgebra.tests.log")
    force_logging(logger)
    force_logging(logger, logging.WARNING)
    handlers = [h for h in logger.handlers if getattr(h, "_pvalgebra", False)]
    assert len(handlers) == 1
    assert handlers[0].level == logging.WARNING
    assert logger.level == logging.WARNING
