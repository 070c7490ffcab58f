import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple, Union

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = (
    "epoch",
    "total_loss",
    "rec_loss",
    "entropy_term",
    "vgae_loss",
    "sample_loss",
    "sinkhorn_distance",
    "valid_recall",
    "weights",
    "group_losses",
    "tracked_weights",
)


@dataclass(frozen=True)
class EpochRecord:
    """Batch-averaged losses and weights of one completed epoch

    `weights` and `group_losses` are per cluster; `tracked_weights` is the share of the effective
    triplet weight that fell on each externally labelled triplet group, empty without a tracker.
    """

    epoch: int
    total_loss: float
    rec_loss: float
    entropy_term: float
    vgae_loss: float
    sample_loss: float
    sinkhorn_distance: Optional[float]
    valid_recall: float
    weights: Tuple[float, ...]
    group_losses: Tuple[float, ...]
    tracked_weights: Tuple[float, ...] = ()

    def as_row(self) -> Dict[str, str]:
        row = {}
        for column in HISTORY_COLUMNS:
            value = getattr(self, column)
            if isinstance(value, tuple):
                row[column] = ";".join(_number(item) for item in value)
            elif value is None:
                row[column] = ""
            else:
                row[column] = _number(value) if isinstance(value, float) else str(value)
        return row


def _number(value: float) -> str:
    return repr(float(value))


@dataclass
class TrainHistory:
    """Per-epoch records of a training run, in epoch order"""

    records: List[EpochRecord] = field(default_factory=list)
    best_epoch: Optional[int] = None
    stopped_early: bool = False

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[EpochRecord]:
        return iter(self.records)

    def append(self, record: EpochRecord) -> None:
        if self.records and record.epoch <= self.records[-1].epoch:
            raise ValueError(f"epoch {record.epoch} recorded after epoch {self.records[-1].epoch}")
        self.records.append(record)

    @property
    def last(self) -> Optional[EpochRecord]:
        return self.records[-1] if self.records else None

    def trajectory_rows(self) -> List[Dict[str, Any]]:
        """Rows for the weight trajectory CSV: one per epoch and cluster"""
        return [
            {"epoch": record.epoch, "cluster_id": cluster, "weight": weight, "group_loss": loss}
            for record in self.records
            for cluster, (weight, loss) in enumerate(zip(record.weights, record.group_losses))
        ]

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as stream:
            writer = csv.DictWriter(stream, fieldnames=HISTORY_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for record in self.records:
                writer.writerow(record.as_row())
        logger.debug(f"History with {len(self.records)} epochs written to {path}")
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "TrainHistory":
        history = cls()
        with Path(path).open(newline="") as stream:
            for row in csv.DictReader(stream):
                history.append(
                    EpochRecord(
                        epoch=int(row["epoch"]),
                        total_loss=float(row["total_loss"]),
                        rec_loss=float(row["rec_loss"]),
                        entropy_term=float(row["entropy_term"]),
                        vgae_loss=float(row["vgae_loss"]),
                        sample_loss=float(row["sample_loss"]),
                        sinkhorn_distance=float(row["sinkhorn_distance"]) if row["sinkhorn_distance"] else None,
                        valid_recall=float(row["valid_recall"]),
                        weights=_floats(row["weights"]),
                        group_losses=_floats(row["group_losses"]),
                        tracked_weights=_floats(row["tracked_weights"]),
                    )
                )
        finite = [record for record in history.records if not math.isnan(record.valid_recall)]
        if finite:
            history.best_epoch = max(finite, key=lambda record: (record.valid_recall, -record.epoch)).epoch
        return history


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(item) for item in text.split(";")) if text else ()
