import re
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

_RULE_PATTERN = re.compile(r"^\s*(rating|watch_ratio)\s*>=\s*([-+0-9.eE]+)\s*$")


@dataclass(frozen=True)
class PositiveRule:
    """Threshold turning explicit feedback into implicit positives

    `kind` only names the quantity stored in the rating column: a star rating or a watch ratio.
    """

    kind: str = "rating"
    threshold: float = 0.0

    def accepts(self, ratings) -> np.ndarray:
        return np.asarray(ratings, dtype=float) >= self.threshold

    @classmethod
    def parse(cls, rule: str) -> "PositiveRule":
        """Parse `rating>=4` or `watch_ratio>=2`"""
        match = _RULE_PATTERN.match(rule)
        if match is None:
            raise ValueError(f"invalid positive rule {rule!r}, expected e.g. 'rating>=4' or 'watch_ratio>=2'")
        return cls(kind=match.group(1), threshold=float(match.group(2)))

    def __str__(self) -> str:
        return f"{self.kind}>={self.threshold:g}"


@dataclass(frozen=True)
class Preset:
    min_user_deg: int
    min_item_deg: int
    positive_rule: PositiveRule
    split_kind: str


PRESETS: Dict[str, Preset] = {
    "food": Preset(15, 50, PositiveRule("rating", 4.0), "temporal"),
    "yelp2018": Preset(25, 50, PositiveRule("rating", 4.0), "popularity"),
    "douban": Preset(25, 50, PositiveRule("rating", 4.0), "popularity"),
    "kuairec": Preset(0, 0, PositiveRule("watch_ratio", 2.0), "exposure"),
}


def preset_rule(name: str) -> Tuple[int, int, PositiveRule]:
    """Degree thresholds and positive rule of a named corpus

    Raises
    ------
    KeyError
        When the preset is unknown
    """
    try:
        preset = PRESETS[name.lower()]
    except KeyError:
        raise KeyError(f"unknown dataset preset {name!r}, expected one of {sorted(PRESETS)}")
    return preset.min_user_deg, preset.min_item_deg, preset.positive_rule
