import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import numpy as np

from ..shared.json_encoder import Encoder
from ..utilities.validation import CHECKPOINT_HEADER_SCHEMA, SchemaValidationError, validate_data_against_schema
from .exceptions import CheckpointError

logger = logging.getLogger(__name__)

_HEADER_LENGTH = struct.Struct("<Q")
_DTYPE = np.dtype("<f8")


def save_checkpoint(
    path: Union[str, Path], arrays: Mapping[str, np.ndarray], metadata: Optional[Dict[str, Any]] = None
) -> Path:
    """Write named float64 arrays to a single file

    Layout: 8-byte little-endian header length, JSON header (names, shapes, dtype tag, metadata),
    then the arrays' raw little-endian float64 bytes concatenated in header order.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "dtype": "float64",
        "metadata": metadata or {},
        "arrays": [{"name": name, "shape": list(np.shape(array))} for name, array in arrays.items()],
    }
    encoded = json.dumps(header, cls=Encoder, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with path.open("wb") as stream:
        stream.write(_HEADER_LENGTH.pack(len(encoded)))
        stream.write(encoded)
        for array in arrays.values():
            stream.write(np.ascontiguousarray(array, dtype=_DTYPE).tobytes())
    logger.debug(f"Checkpoint with {len(arrays)} arrays written to {path}")
    return path


def read_checkpoint(path: Union[str, Path]) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    """Arrays and metadata of a checkpoint written by `save_checkpoint`

    Raises
    ------
    CheckpointError
        When the file is truncated, its header is invalid or sizes don't add up
    """
    path = Path(path)
    try:
        payload = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"unreadable checkpoint {path} ({exc})")

    if len(payload) < _HEADER_LENGTH.size:
        raise CheckpointError(f"checkpoint {path} is truncated")
    (header_length,) = _HEADER_LENGTH.unpack_from(payload)
    body_start = _HEADER_LENGTH.size + header_length
    try:
        header = json.loads(payload[_HEADER_LENGTH.size : body_start].decode("utf-8"))
        validate_data_against_schema(header, CHECKPOINT_HEADER_SCHEMA)
    except (UnicodeDecodeError, json.JSONDecodeError, SchemaValidationError) as exc:
        raise CheckpointError(f"invalid checkpoint header in {path} ({exc})")

    arrays: Dict[str, np.ndarray] = {}
    offset = body_start
    for entry in header["arrays"]:
        count = int(np.prod(entry["shape"], dtype=np.int64))
        end = offset + count * _DTYPE.itemsize
        if end > len(payload):
            raise CheckpointError(f"checkpoint {path} is truncated at array {entry['name']!r}")
        arrays[entry["name"]] = np.frombuffer(payload, dtype=_DTYPE, count=count, offset=offset).reshape(
            entry["shape"]
        ).astype(np.float64)
        offset = end
    if offset != len(payload):
        raise CheckpointError(f"checkpoint {path} has {len(payload) - offset} trailing bytes")
    return arrays, header.get("metadata", {})


def load_checkpoint(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    """Named arrays of a checkpoint written by `save_checkpoint`"""
    arrays, _ = read_checkpoint(path)
    return arrays
