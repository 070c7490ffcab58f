"""Training metric documents, one JSON line per flush
"""
from .base import MetricManager, MetricUnit
from .exceptions import MetricUnitError, MetricValueError, SchemaValidationError
from .metrics import Metrics

__all__ = [
    "Metrics",
    "MetricManager",
    "MetricUnit",
    "MetricUnitError",
    "SchemaValidationError",
    "MetricValueError",
]
