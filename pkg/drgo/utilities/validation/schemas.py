SPLIT_KINDS = ["popularity", "temporal", "exposure"]

_COUNT = {"type": "integer", "minimum": 0}

SPLIT_MANIFEST_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema",
    "$id": "drgo://schemas/split-manifest.json",
    "type": "object",
    "title": "Split manifest",
    "required": ["kind", "n_users", "n_items", "counts", "files"],
    "properties": {
        "kind": {"type": "string", "enum": SPLIT_KINDS},
        "seed": {"type": ["integer", "null"]},
        "ood_fraction": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
        "n_users": {"type": "integer", "minimum": 1},
        "n_items": {"type": "integer", "minimum": 1},
        "counts": {
            "type": "object",
            "required": ["train", "valid", "test_iid", "test_ood"],
            "properties": {"train": _COUNT, "valid": _COUNT, "test_iid": _COUNT, "test_ood": _COUNT},
        },
        "files": {
            "type": "object",
            "required": ["train", "valid", "test_iid", "test_ood"],
            "additionalProperties": {"type": "string"},
        },
    },
}

RUN_MANIFEST_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema",
    "$id": "drgo://schemas/run-manifest.json",
    "type": "object",
    "title": "Run manifest",
    "required": ["command", "seed", "config", "artifacts"],
    "properties": {
        "command": {"type": "string"},
        "seed": {"type": "integer"},
        "config": {"type": "object"},
        "artifacts": {"type": "array", "items": {"type": "string"}},
    },
}

CHECKPOINT_HEADER_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema",
    "$id": "drgo://schemas/checkpoint-header.json",
    "type": "object",
    "title": "Checkpoint header",
    "required": ["dtype", "arrays"],
    "properties": {
        "dtype": {"const": "float64"},
        "metadata": {"type": "object"},
        "arrays": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "shape"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "shape": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                },
            },
        },
    },
}
