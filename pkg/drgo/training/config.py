import json
import logging
from pathlib import Path
from typing import Any, Dict, Literal, Mapping, Optional, Union

from pydantic import BaseModel, Extra, ValidationError, root_validator, validator

from ..exceptions import ConfigError

logger = logging.getLogger(__name__)

METHODS = ("drgo", "erm", "kl-dro")

# Published search grids; values outside them are accepted with a warning
GRIDS: Dict[str, tuple] = {
    "embed_dim": (16, 32, 64, 128),
    "n_layers": (1, 2, 3, 4, 5),
    "n_clusters": (1, 3, 5, 8, 10),
    "rho": (0.001, 0.01, 0.05, 0.1, 0.5),
    "top_pct": (1, 5, 10, 15, 25),
    "diffusion_steps": (20, 50, 100, 200, 500),
    "weight_decay": (0.1, 0.001, 0.0001, 0.00001),
}

_NULLS = {"", "none", "null"}


class TrainConfig(BaseModel):
    """Every knob of a training run

    Field names double as configuration file keys and CLI flags (`embed_dim` <-> `--embed-dim`).

    Example
    -------
        >>> config = TrainConfig.from_file("drgo.conf").with_overrides({"rho": 0.1})
        >>> config.n_clusters
        5
    """

    method: Literal["drgo", "erm", "kl-dro"] = "drgo"
    embed_dim: int = 64
    n_layers: int = 3
    n_clusters: int = 5
    rho: float = 0.05
    relative_radius: bool = True
    sinkhorn_lambda: float = 0.05
    entropy_beta: float = 0.1
    kl_radius: float = 0.1
    top_pct: float = 10.0
    diffusion_steps: int = 50
    t_start: Optional[int] = None
    beta_start: float = 1e-4
    beta_end: float = 0.02
    use_diffusion: bool = True
    use_features: bool = True
    feature_dim: int = 64
    vgae_hidden_dim: int = 64
    learning_rate: float = 1e-3
    weight_decay: float = 1e-4
    epochs: int = 100
    batch_size: int = 2048
    patience: int = 10
    kmeans_max_iter: int = 100
    emit_metrics: bool = False
    seed: int = 0

    class Config:
        extra = Extra.forbid
        allow_mutation = False

    @validator(
        "embed_dim",
        "n_clusters",
        "diffusion_steps",
        "feature_dim",
        "vgae_hidden_dim",
        "epochs",
        "batch_size",
        "patience",
    )
    def positive_int(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be at least 1")
        return value

    @validator("n_layers", "kmeans_max_iter")
    def non_negative_int(cls, value: int) -> int:
        if value < 0:
            raise ValueError("must be non-negative")
        return value

    @validator("rho", "entropy_beta", "kl_radius", "weight_decay")
    def non_negative_float(cls, value: float) -> float:
        if value < 0:
            raise ValueError("must be non-negative")
        return value

    @validator("sinkhorn_lambda", "learning_rate")
    def positive_float(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("must be positive")
        return value

    @validator("top_pct")
    def percentage(cls, value: float) -> float:
        if not 0 < value <= 100:
            raise ValueError("must lie in (0, 100]")
        return value

    @root_validator(skip_on_failure=True)
    def consistent_schedule(cls, values: Dict[str, Any]) -> Dict[str, Any]:
        if not 0 < values["beta_start"] <= values["beta_end"] < 1:
            raise ValueError("expected 0 < beta_start <= beta_end < 1")
        t_start = values.get("t_start")
        if t_start is not None and not 1 <= t_start <= values["diffusion_steps"]:
            raise ValueError(f"t_start must lie in 1..diffusion_steps ({values['diffusion_steps']})")
        for key, grid in GRIDS.items():
            if values[key] not in grid:
                logger.warning(
                    f"{key}={values[key]} is outside the published grid",
                    extra={"config_key": key, "value": values[key], "grid": list(grid)},
                )
        return values

    @property
    def denoising(self) -> bool:
        """Whether the VGAE and diffusion stack takes part in training"""
        return self.method == "drgo"

    @property
    def start_step(self) -> int:
        return self.t_start if self.t_start is not None else max(1, self.diffusion_steps // 2)

    def with_overrides(self, overrides: Mapping[str, Any]) -> "TrainConfig":
        """Copy with `overrides` applied and validated

        Raises
        ------
        ConfigError
            When a key is unknown or a value fails validation
        """
        return build_config({**self.dict(), **_clean(overrides)})

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "TrainConfig":
        """Load a flat `key = value` file (with `#` comments) or a JSON object

        Raises
        ------
        ConfigError
            When the file can't be read or parsed, or holds unknown keys or invalid values
        """
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"unreadable configuration {path} ({exc})")

        if path.suffix == ".json" or text.lstrip().startswith("{"):
            try:
                values = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc})")
            if not isinstance(values, dict):
                raise ConfigError(f"{path}: expected a JSON object")
        else:
            values = parse_key_values(text, source=str(path))
        return build_config(_clean(values))


def parse_key_values(text: str, source: str = "<config>") -> Dict[str, str]:
    values: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{number}: expected key = value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{number}: missing key")
        values[key.replace("-", "_")] = value
    return values


def _clean(values: Mapping[str, Any]) -> Dict[str, Any]:
    cleaned = {}
    for key, value in values.items():
        if isinstance(value, str) and value.strip().lower() in _NULLS:
            value = None
        cleaned[key.replace("-", "_")] = value
    return cleaned


def build_config(values: Mapping[str, Any]) -> TrainConfig:
    unknown = sorted(set(values) - set(TrainConfig.__fields__))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    try:
        return TrainConfig(**values)
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {exc}")
