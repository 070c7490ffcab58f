import logging


def set_package_logger_handler():
    logger = logging.getLogger("drgo")
    logger.addHandler(logging.NullHandler())
    logger.propagate = False
