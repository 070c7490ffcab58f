"""
JSON Schema validation of split manifests, run manifests and checkpoint headers
"""

from .base import validate_data_against_schema
from .exceptions import InvalidSchemaFormatError, SchemaValidationError
from .schemas import CHECKPOINT_HEADER_SCHEMA, RUN_MANIFEST_SCHEMA, SPLIT_MANIFEST_SCHEMA

__all__ = [
    "validate_data_against_schema",
    "InvalidSchemaFormatError",
    "SchemaValidationError",
    "SPLIT_MANIFEST_SCHEMA",
    "RUN_MANIFEST_SCHEMA",
    "CHECKPOINT_HEADER_SCHEMA",
]
