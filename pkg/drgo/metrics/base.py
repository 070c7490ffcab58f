import datetime
import logging
import math
import numbers
import os
from collections import defaultdict
from enum import Enum
from typing import Any, Dict, List, Optional, Union

from ..shared import constants
from ..shared.functions import resolve_env_var_choice
from .exceptions import MetricUnitError, MetricValueError, SchemaValidationError

logger = logging.getLogger(__name__)

MAX_DIMENSIONS = 9
DEFAULT_NAMESPACE = "drgo"


class MetricUnit(Enum):
    Seconds = "Seconds"
    Milliseconds = "Milliseconds"
    Percent = "Percent"
    Count = "Count"
    CountPerSecond = "Count/Second"
    None_ = "None"


class MetricManager:
    """Base class for metric functionality (namespace, metric, dimension, serialization)

    Metrics are accumulated in memory and serialized into a single JSON document shaped after
    the embedded metric format: a `_drgo` block describing namespace, dimension set and metric
    definitions, followed by dimension, metadata and metric values as top level keys.

    **Use `drgo.metrics.Metrics` to create and flush metric documents.**

    Environment variables
    ---------------------
    DRGO_METRICS_NAMESPACE : str
        metric namespace to be set for all metrics
    DRGO_SERVICE_NAME : str
        service name used for default dimension

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
        self,
        metric_set: Optional[Dict[str, Any]] = None,
        dimension_set: Optional[Dict] = None,
        namespace: Optional[str] = None,
        metadata_set: Optional[Dict[str, Any]] = None,
        service: Optional[str] = None,
    ):
        self.metric_set = metric_set if metric_set is not None else {}
        self.dimension_set = dimension_set if dimension_set is not None else {}
        self.namespace = resolve_env_var_choice(
            choice=namespace, env=os.getenv(constants.METRICS_NAMESPACE_ENV, DEFAULT_NAMESPACE)
        )
        self.service = resolve_env_var_choice(choice=service, env=os.getenv(constants.SERVICE_NAME_ENV))
        self._metric_units = [unit.value for unit in MetricUnit]
        self._metric_unit_options = list(MetricUnit.__members__)
        self.metadata_set = metadata_set if metadata_set is not None else {}

    def add_metric(self, name: str, unit: Union[MetricUnit, str], value: float) -> None:
        """Adds given metric

        Example
        -------
        **Add given metric using MetricUnit enum**

            metric.add_metric(name="EpochDuration", unit=MetricUnit.Seconds, value=1.2)

        **Add given metric using plain string as value unit**

            metric.add_metric(name="SkippedBatches", unit="Count", value=1)

        Parameters
        ----------
        name : str
            Metric name
        unit : Union[MetricUnit, str]
            `drgo.metrics.MetricUnit`
        value : float
            Metric value

        Raises
        ------
        MetricValueError
            When value is not a finite number
        MetricUnitError
            When metric unit is not supported
        """
        if isinstance(value, bool) or not isinstance(value, numbers.Number) or not math.isfinite(float(value)):
            raise MetricValueError(f"{value} is not a valid number")

        unit = self.__extract_metric_unit_value(unit=unit)
        metric: Dict = self.metric_set.get(name, defaultdict(list))
        metric["Unit"] = unit
        metric["Value"].append(float(value))
        logger.debug(f"Adding metric: {name} with {metric}")
        self.metric_set[name] = metric

    def serialize_metric_set(
        self,
        metrics: Optional[Dict] = None,
        dimensions: Optional[Dict] = None,
        metadata: Optional[Dict] = None,
        timestamp: Optional[int] = None,
    ) -> Dict:
        """Serializes metric and dimensions set

        Parameters
        ----------
        metrics : Dict, optional
            Dictionary of metrics to serialize, by default the current metric set
        dimensions : Dict, optional
            Dictionary of dimensions to serialize, by default the current dimension set
        metadata: Dict, optional
            Dictionary of metadata to serialize, by default the current metadata set
        timestamp: int, optional
            Epoch milliseconds, by default now

        Returns
        -------
        Dict
            Serialized metric document

        Raises
        ------
        SchemaValidationError
            Raised when there is nothing to serialize or no namespace
        """
        if metrics is None:
            metrics = self.metric_set

        if dimensions is None:
            dimensions = self.dimension_set

        if metadata is None:
            metadata = self.metadata_set

        if self.service and not dimensions.get("service"):
            dimensions["service"] = self.service

        if len(metrics) == 0:
            raise SchemaValidationError("Must contain at least one metric.")

        if not self.namespace:
            raise SchemaValidationError("Must contain a metric namespace.")

        logger.debug({"details": "Serializing metrics", "metrics": metrics, "dimensions": dimensions})

        metric_names_and_units: List[Dict[str, str]] = []
        metric_names_and_values: Dict[str, Any] = {}

        for metric_name, metric in metrics.items():
            values = metric.get("Value", [])
            metric_names_and_units.append({"Name": metric_name, "Unit": metric.get("Unit", "")})
            # single observations are written as scalars
            metric_names_and_values[metric_name] = values[0] if len(values) == 1 else list(values)

        if timestamp is None:
            timestamp = int(datetime.datetime.now().timestamp() * 1000)

        return {
            "_drgo": {
                "Timestamp": timestamp,
                "Metrics": [
                    {
                        "Namespace": self.namespace,
                        "Dimensions": [list(dimensions.keys())],
                        "Metrics": metric_names_and_units,
                    }
                ],
            },
            **dimensions,
            **metadata,
            **metric_names_and_values,
        }

    def add_dimension(self, name: str, value: Any) -> None:
        """Adds given dimension to all metrics

        Example
        -------
        **Add a metric dimension**

            metric.add_dimension(name="method", value="drgo")

        Parameters
        ----------
        name : str
            Dimension name
        value : Any
            Dimension value, cast to str
        """
        logger.debug(f"Adding dimension: {name}:{value}")
        if name not in self.dimension_set and len(self.dimension_set) == MAX_DIMENSIONS:
            raise SchemaValidationError(
                f"Maximum number of dimensions exceeded ({MAX_DIMENSIONS}): Unable to add dimension {name}."
            )
        self.dimension_set[name] = value if isinstance(value, str) else str(value)

    def add_metadata(self, key: str, value: Any) -> None:
        """Adds high cardinality metadata (run id, config hash) to the next document"""
        logger.debug(f"Adding metadata: {key}:{value}")
        self.metadata_set[str(key)] = value

    def __extract_metric_unit_value(self, unit: Union[str, MetricUnit]) -> str:
        """Return metric value from metric unit whether that's str or MetricUnit enum

        Raises
        ------
        MetricUnitError
            When metric unit is not supported
        """
        if isinstance(unit, str):
            if unit in self._metric_unit_options:
                unit = MetricUnit[unit].value

            if unit not in self._metric_units:
                raise MetricUnitError(
                    f"Invalid metric unit '{unit}', expected either option: {self._metric_unit_options}"
                )

        if isinstance(unit, MetricUnit):
            unit = unit.value

        return unit
