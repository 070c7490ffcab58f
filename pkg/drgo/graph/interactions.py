import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import pandas as pd

from .exceptions import InteractionParseError

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("user", "item")
KNOWN_COLUMNS = ("user", "item", "rating", "timestamp")


@dataclass(frozen=True)
class Interaction:
    user_id: str
    item_id: str
    rating: float = 1.0
    timestamp: int = 0


@dataclass(frozen=True)
class InteractionFormat:
    """How an interaction file is laid out

    Parameters
    ----------
    delimiter : str
        field separator, tab by default
    has_header : bool
        skip the first line
    columns : Tuple[str, ...]
        column order; must contain user and item, may contain rating and timestamp
    """

    delimiter: str = "\t"
    has_header: bool = False
    columns: Tuple[str, ...] = KNOWN_COLUMNS

    def __post_init__(self):
        unknown = set(self.columns) - set(KNOWN_COLUMNS)
        missing = set(REQUIRED_COLUMNS) - set(self.columns)
        if unknown or missing:
            raise ValueError(f"invalid interaction columns {self.columns}: unknown={unknown}, missing={missing}")

    @classmethod
    def from_name(cls, name: str, has_header: bool = False) -> "InteractionFormat":
        """`tsv` or `csv`"""
        delimiters = {"tsv": "\t", "csv": ","}
        if name not in delimiters:
            raise ValueError(f"unknown interaction format {name!r}, expected one of {sorted(delimiters)}")
        return cls(delimiter=delimiters[name], has_header=has_header)


def load_interactions(path: Union[str, Path], fmt: InteractionFormat = InteractionFormat()) -> List[Interaction]:
    """Read every row of a delimited interaction file, in file order, without filtering

    Empty rating or timestamp cells fall back to 1.0 and 0.

    Raises
    ------
    InteractionParseError
        When the file can't be read or a row can't be parsed; carries the 1-based line number
    """
    path = Path(path)
    try:
        frame = pd.read_csv(
            path,
            sep=fmt.delimiter,
            header=None,
            names=list(fmt.columns),
            skiprows=1 if fmt.has_header else 0,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=False,
            engine="python",
        )
    except pd.errors.EmptyDataError:
        logger.debug(f"{path} is empty")
        return []
    except pd.errors.ParserError as exc:
        match = re.search(r"line (\d+)", str(exc))
        line = int(match.group(1)) if match else None
        raise InteractionParseError(f"malformed row ({exc})", path=path, line=line)
    except OSError as exc:
        raise InteractionParseError(f"unreadable file ({exc})", path=path)

    frame = frame.fillna("")
    if frame.empty:
        return []

    first_line = 2 if fmt.has_header else 1
    line_numbers = np.arange(len(frame)) + first_line
    blank = (frame == "").all(axis=1).to_numpy()
    frame, line_numbers = frame[~blank], line_numbers[~blank]

    for column in REQUIRED_COLUMNS:
        empty = (frame[column].str.strip() == "").to_numpy()
        if empty.any():
            raise InteractionParseError(f"missing {column} id", path=path, line=int(line_numbers[empty][0]))

    ratings = _numeric_column(frame, "rating", 1.0, path, line_numbers)
    timestamps = _numeric_column(frame, "timestamp", 0.0, path, line_numbers)
    fractional = timestamps != np.floor(timestamps)
    if fractional.any():
        raise InteractionParseError("timestamp is not an integer", path=path, line=int(line_numbers[fractional][0]))

    return [
        Interaction(user_id=user.strip(), item_id=item.strip(), rating=float(rating), timestamp=int(timestamp))
        for user, item, rating, timestamp in zip(frame["user"], frame["item"], ratings, timestamps)
    ]


def _numeric_column(frame: pd.DataFrame, column: str, default: float, path: Path, line_numbers) -> np.ndarray:
    if column not in frame.columns:
        return np.full(len(frame), default)

    raw = frame[column].str.strip()
    values = pd.to_numeric(raw.where(raw != "", None), errors="coerce").to_numpy(dtype=float)
    invalid = np.isnan(values) & (raw != "").to_numpy()
    invalid |= np.isinf(values)
    if invalid.any():
        raise InteractionParseError(f"non-numeric {column}", path=path, line=int(line_numbers[invalid][0]))

    return np.where(np.isnan(values), default, values)
