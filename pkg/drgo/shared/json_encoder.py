import json
import math
from pathlib import Path

import numpy as np


class Encoder(json.JSONEncoder):
    """
    JSON encoder for numpy scalars and arrays, paths and sets.

    Non-finite numpy scalars and array entries are written as strings ("inf", "-inf", "nan"). Python
    floats, np.float64 included, never reach `default` and keep the json module behaviour.
    """

    def default(self, obj):
        if isinstance(obj, np.integer):
            return int(obj)
        if isinstance(obj, np.floating):
            return _finite_or_str(float(obj))
        if isinstance(obj, np.ndarray):
            return _sanitize(obj.tolist())
        if isinstance(obj, np.bool_):
            return bool(obj)
        if isinstance(obj, Path):
            return str(obj)
        if isinstance(obj, (set, frozenset)):
            return sorted(obj)
        return super().default(obj)


def _finite_or_str(value: float):
    if math.isfinite(value):
        return value
    return str(value)


def _sanitize(value):
    if isinstance(value, list):
        return [_sanitize(item) for item in value]
    if isinstance(value, float):
        return _finite_or_str(value)
    return value


def dumps(data, **kwargs) -> str:
    """Deterministic JSON: sorted keys, shared encoder"""
    return json.dumps(data, sort_keys=True, cls=Encoder, **kwargs)
