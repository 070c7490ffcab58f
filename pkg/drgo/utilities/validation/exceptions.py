from typing import Any, List, Optional

from ...exceptions import DataError


class SchemaValidationError(DataError):
    """When a manifest or header fails schema validation"""

    def __init__(
        self,
        message: Optional[str] = None,
        validation_message: Optional[str] = None,
        name: Optional[str] = None,
        path: Optional[List] = None,
        value: Optional[Any] = None,
        rule: Optional[str] = None,
    ):
        """

        Parameters
        ----------
        message : str, optional
            formatted error message
        validation_message : str, optional
            what is wrong, e.g. `data.counts.train must be bigger than or equal to 0`
        name : str, optional
            name of the offending path, e.g. `data.counts.train`
        path: List, optional
            the same path as a list, e.g. `['data', 'counts', 'train']`
        value : Any, optional
            The invalid value
        rule : str, optional
            rule the value breaks, e.g. `minimum`
        """
        super().__init__(message)
        self.message = message
        self.validation_message = validation_message
        self.name = name
        self.path = path
        self.value = value
        self.rule = rule


class InvalidSchemaFormatError(Exception):
    """When JSON Schema is in invalid format"""
