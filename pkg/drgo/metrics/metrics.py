import functools
import json
import logging
import sys
import warnings
from typing import IO, Any, Callable, Dict, Optional

from ..shared.json_encoder import Encoder
from .base import MetricManager

logger = logging.getLogger(__name__)


class Metrics(MetricManager):
    """Metrics accumulate named values and flush them as one JSON document per line

    The trainer flushes one document per epoch with `method` and `split` dimensions,
    so consumers can follow a run by tailing the stream.

    Example
    -------
    **Record an epoch and flush it**

        from drgo import Metrics

        metrics = Metrics(namespace="drgo", service="trainer")
        metrics.add_dimension(name="method", value="drgo")
        metrics.add_metric(name="TotalLoss", unit="None_", value=0.52)
        metrics.flush()

    Environment variables
    ---------------------
    DRGO_METRICS_NAMESPACE : str
        metric namespace
    DRGO_SERVICE_NAME : str
        service name used for default dimension

    Parameters
    ----------
    service : str, optional
        service name to be used as metric dimension
    namespace : str, optional
        Namespace for metrics
    stream : IO[str], optional
        where flushed documents are written, by default sys.stdout

    Raises
    ------
    MetricUnitError
        When metric unit isn't supported
    MetricValueError
        When metric value isn't a finite number
    SchemaValidationError
        When metric object can't be serialized
    """

    def __init__(
        self, service: Optional[str] = None, namespace: Optional[str] = None, stream: Optional[IO[str]] = None
    ):
        self.default_dimensions: Dict[str, str] = {}
        self.stream = stream
        super().__init__(namespace=namespace, service=service)

    def set_default_dimensions(self, **dimensions) -> None:
        """Dimensions kept across flushes, e.g. method and split of a run"""
        for name, value in dimensions.items():
            self.add_dimension(name, value)

        self.default_dimensions.update(**{name: str(value) for name, value in dimensions.items()})

    def clear_default_dimensions(self) -> None:
        self.default_dimensions.clear()

    def clear_metrics(self) -> None:
        logger.debug("Clearing out existing metric set from memory")
        self.metric_set.clear()
        self.dimension_set.clear()
        self.metadata_set.clear()
        self.set_default_dimensions(**self.default_dimensions)

    def flush(self, raise_on_empty_metrics: bool = False) -> Optional[Dict[str, Any]]:
        """Serialize, write and clear the current metric set

        Returns
        -------
        Dict, optional
            The written document, None when nothing was recorded and raising is disabled
        """
        if not self.metric_set and not raise_on_empty_metrics:
            warnings.warn("No metrics to publish, skipping")
            return None

        document = self.serialize_metric_set()
        self.clear_metrics()
        stream = self.stream or sys.stdout
        stream.write(json.dumps(document, cls=Encoder, separators=(",", ":")) + "\n")
        stream.flush()
        return document

    def log_metrics(
        self,
        command: Optional[Callable[..., Any]] = None,
        raise_on_empty_metrics: bool = False,
        default_dimensions: Optional[Dict[str, str]] = None,
    ):
        """Decorator flushing remaining metrics once the decorated command returns or raises

        Example
        -------
            metrics = Metrics(service="drgo")

            @metrics.log_metrics(default_dimensions={"method": "drgo"})
            def train_command(config, split):
                ...
        """
        if command is None:
            logger.debug("Decorator called with parameters")
            return functools.partial(
                self.log_metrics,
                raise_on_empty_metrics=raise_on_empty_metrics,
                default_dimensions=default_dimensions,
            )

        @functools.wraps(command)
        def decorate(*args, **kwargs):
            try:
                if default_dimensions:
                    self.set_default_dimensions(**default_dimensions)
                return command(*args, **kwargs)
            finally:
                self.flush(raise_on_empty_metrics=raise_on_empty_metrics)

        return decorate
