# -*- coding: utf-8 -*-

"""Top-level package for DRGO, distributionally robust graph recommendation."""


from .logging import Logger  # noqa: F401
from .metrics import Metrics  # noqa: F401
from .package_logger import set_package_logger_handler

__author__ = """DRGO maintainers"""

set_package_logger_handler()
