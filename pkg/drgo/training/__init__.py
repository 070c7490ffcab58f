"""Configuration, seeding and the training loop
"""
from .config import GRIDS, METHODS, TrainConfig, build_config, parse_key_values
from .exceptions import TrainingDivergenceError
from .history import HISTORY_COLUMNS, EpochRecord, TrainHistory
from .seeds import SUBSTREAMS, SeedStreams
from .trainer import DrgoModel, EpochState, Trainer, TripletGrouping, build_model, total_loss, train

__all__ = [
    "GRIDS",
    "HISTORY_COLUMNS",
    "METHODS",
    "SUBSTREAMS",
    "DrgoModel",
    "EpochRecord",
    "EpochState",
    "SeedStreams",
    "TrainConfig",
    "TrainHistory",
    "Trainer",
    "TrainingDivergenceError",
    "TripletGrouping",
    "build_config",
    "build_model",
    "parse_key_values",
    "total_loss",
    "train",
]
