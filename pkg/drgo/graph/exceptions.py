from pathlib import Path
from typing import Optional, Union

from ..exceptions import DataError


class GraphError(DataError):
    """Base error for interaction data, graphs and splits"""


class InteractionParseError(GraphError):
    """Interaction file can't be read, or one of its rows can't be parsed

    `line` is the 1-based line number in the file, None when the whole file is unreadable.
    """

    def __init__(self, message: str, path: Union[str, Path], line: Optional[int] = None):
        location = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{location}: {message}")
        self.path = str(path)
        self.line = line


class EmptyGraphError(GraphError):
    """Filtering removed every interaction"""


class InvalidEdgesError(GraphError):
    """Edges out of range or duplicated"""


class SplitError(GraphError):
    """Graph can't be split as requested"""


class NoiseInjectionError(GraphError):
    """Not enough non-edges to replace the requested share of edges"""
