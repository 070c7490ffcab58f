class MetricUnitError(Exception):
    """When metric unit isn't one of MetricUnit"""

    pass


class SchemaValidationError(Exception):
    """When a metric document can't be serialized (no metrics, no namespace, too many dimensions)"""

    pass


class MetricValueError(Exception):
    """When metric value isn't a finite number"""

    pass
