import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd

from ..shared.json_encoder import Encoder
from ..utilities.validation import SPLIT_MANIFEST_SCHEMA, validate_data_against_schema
from .edges import EdgeSet
from .exceptions import InteractionParseError
from .graph import InteractionGraph
from .splits import SplitBundle

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
EDGE_FILES = {
    "train": "train.tsv",
    "valid": "valid.tsv",
    "test_iid": "test_iid.tsv",
    "test_ood": "test_ood.tsv",
}
FEATURES_FILE = "features.npy"


def write_edges(path: Union[str, Path], edges: EdgeSet) -> None:
    """Tab separated `user item timestamp` lines, sorted by (user, item)"""
    frame = pd.DataFrame({"user": edges.users, "item": edges.items, "timestamp": edges.timestamps})
    frame.to_csv(path, sep="\t", header=False, index=False, lineterminator="\n")


def read_edges(path: Union[str, Path]) -> EdgeSet:
    """Inverse of `write_edges`

    Raises
    ------
    InteractionParseError
        When the file can't be read or holds non-integer fields
    """
    try:
        frame = pd.read_csv(path, sep="\t", header=None, names=["user", "item", "timestamp"], dtype=np.int64)
    except pd.errors.EmptyDataError:
        return EdgeSet.empty()
    except (OSError, ValueError, pd.errors.ParserError) as exc:
        raise InteractionParseError(f"invalid edge list ({exc})", path=path)
    return EdgeSet.from_arrays(frame["user"], frame["item"], frame["timestamp"])


def save_split(bundle: SplitBundle, directory: Union[str, Path], extras: Optional[Dict[str, Any]] = None) -> Path:
    """Write the four edge lists, optional node features and a JSON manifest

    Parameters
    ----------
    bundle : SplitBundle
        split to persist
    directory : str or Path
        created if absent
    extras : Dict, optional
        additional manifest keys, e.g. the resolved configuration that produced the split

    Returns
    -------
    Path
        manifest path
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    parts = {
        "train": bundle.train.edges,
        "valid": bundle.valid,
        "test_iid": bundle.test_iid,
        "test_ood": bundle.test_ood,
    }
    for name, edges in parts.items():
        write_edges(directory / EDGE_FILES[name], edges)

    files = dict(EDGE_FILES)
    if bundle.train.features is not None:
        np.save(directory / FEATURES_FILE, bundle.train.features)
        files["features"] = FEATURES_FILE

    manifest = {
        **(extras or {}),
        **bundle.extras,
        "kind": bundle.kind,
        "seed": bundle.seed,
        "ood_fraction": bundle.ood_fraction,
        "n_users": bundle.n_users,
        "n_items": bundle.n_items,
        "counts": bundle.counts(),
        "files": files,
    }
    manifest_path = directory / MANIFEST_FILE
    manifest_path.write_text(json.dumps(manifest, cls=Encoder, indent=2, sort_keys=True) + "\n")
    logger.debug(f"Split written to {directory} with counts {manifest['counts']}")
    return manifest_path


def load_split(directory: Union[str, Path]) -> SplitBundle:
    """Read a split written by `save_split`

    Raises
    ------
    SchemaValidationError
        When the manifest doesn't match the split manifest schema
    InteractionParseError
        When an edge list can't be read
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST_FILE
    try:
        manifest = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InteractionParseError(f"unreadable manifest ({exc})", path=manifest_path)
    validate_data_against_schema(manifest, SPLIT_MANIFEST_SCHEMA)

    files = manifest["files"]
    features = np.load(directory / files["features"]) if "features" in files else None
    train = InteractionGraph(
        n_users=manifest["n_users"],
        n_items=manifest["n_items"],
        edges=read_edges(directory / files["train"]),
        features=features,
    )
    known = {"kind", "seed", "ood_fraction", "n_users", "n_items", "counts", "files"}
    return SplitBundle(
        train=train,
        valid=read_edges(directory / files["valid"]),
        test_iid=read_edges(directory / files["test_iid"]),
        test_ood=read_edges(directory / files["test_ood"]),
        kind=manifest["kind"],
        seed=manifest.get("seed"),
        ood_fraction=manifest.get("ood_fraction"),
        extras={key: value for key, value in manifest.items() if key not in known},
    )
