"""Command line entry point: `drgo <command> [options]`

Every command writes its artifacts plus a `run_manifest.json` holding the resolved configuration and seed
into the output directory (`--output`, else `$DRGO_OUTPUT_ROOT/<command>`, else `runs/<command>`).
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .autodiff import read_checkpoint
from .dro import kl_blowup_demo, write_weight_trajectory
from .evaluation import DEFAULT_KS, split_report, synthetic_variance_diagnostic
from .evaluation.experiments import (
    ablation_study,
    grid_sweep,
    grouped_benchmark,
    noise_robustness_sweep,
    weight_trajectory_experiment,
    write_report,
)
from .exceptions import DataError, DrgoError, UsageError
from .graph import (
    PRESETS,
    EdgeSet,
    InteractionFormat,
    InteractionGraph,
    PositiveRule,
    SplitBundle,
    build_graph,
    generate_synthetic,
    load_interactions,
    load_split,
    save_split,
    split_exposure,
    split_popularity,
    split_temporal,
    write_edges,
)
from .logging import Logger
from .shared import constants
from .shared.functions import parse_float_list, resolve_output_root
from .shared.json_encoder import dumps
from .training import METHODS, DrgoModel, SeedStreams, TrainConfig, build_config, train
from .utilities.validation import RUN_MANIFEST_SCHEMA, validate_data_against_schema

logger = Logger(service=constants.DEFAULT_SERVICE_NAME)

RUN_MANIFEST_FILE = "run_manifest.json"
SPLIT_KINDS = ("popularity", "temporal", "exposure")


class ArgumentParser(argparse.ArgumentParser):
    """argparse raising UsageError instead of exiting, so failures share one error record"""

    def error(self, message: str):
        raise UsageError(message)


def _parse_ks(value: str) -> List[int]:
    try:
        ks = [int(item) for item in parse_float_list(value)]
    except ValueError as exc:
        raise UsageError(f"invalid cut-offs {value!r} ({exc})")
    if min(ks) < 1:
        raise UsageError(f"cut-offs must be positive, got {value!r}")
    return ks


def _parse_ratios(value: str) -> List[float]:
    try:
        return parse_float_list(value)
    except ValueError as exc:
        raise UsageError(str(exc))


def _split_assignment(text: str) -> Tuple[str, str]:
    key, separator, value = text.partition("=")
    if not separator or not key.strip():
        raise UsageError(f"expected key=value, got {text!r}")
    return key.strip(), value.strip()


def resolve_config(args: argparse.Namespace) -> TrainConfig:
    """Configuration file, then TrainConfig flags, then `--set key=value` overrides

    Raises
    ------
    ConfigError
        When a key is unknown or a value fails validation
    """
    config = TrainConfig.from_file(args.config) if args.config else build_config({})
    overrides: Dict[str, Any] = {name: getattr(args, name) for name in TrainConfig.__fields__ if hasattr(args, name)}
    for assignment in args.set or []:
        key, value = _split_assignment(assignment)
        overrides[key] = value
    return config.with_overrides(overrides) if overrides else config


def output_directory(args: argparse.Namespace) -> Path:
    directory = Path(args.output) if args.output else resolve_output_root() / args.command
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def write_manifest(directory: Path, command: str, config: TrainConfig, artifacts: List[str], **extras) -> Path:
    """Run manifest validated against the run manifest schema

    Raises
    ------
    SchemaValidationError
        When the manifest doesn't match the schema
    """
    manifest = {**extras, "command": command, "seed": config.seed, "config": config.dict(), "artifacts": artifacts}
    document = json.loads(dumps(manifest))
    validate_data_against_schema(document, RUN_MANIFEST_SCHEMA)
    path = directory / RUN_MANIFEST_FILE
    path.write_text(dumps(document, indent=2) + "\n")
    return path


def _observed_edges(graph: InteractionGraph, path: str, fmt: InteractionFormat) -> EdgeSet:
    """Fully observed interactions mapped onto the graph's dense indices; unknown ids are dropped"""
    if graph.user_ids is None or graph.item_ids is None:
        raise DataError("the graph carries no original identifiers to map observed interactions onto")
    users = {user_id: index for index, user_id in enumerate(graph.user_ids)}
    items = {item_id: index for index, item_id in enumerate(graph.item_ids)}
    pairs = {
        (users[row.user_id], items[row.item_id])
        for row in load_interactions(path, fmt)
        if row.user_id in users and row.item_id in items
    }
    ordered = sorted(pairs)
    logger.info("Observed interactions mapped", observed=len(ordered))
    return EdgeSet.from_arrays([pair[0] for pair in ordered], [pair[1] for pair in ordered])


@logger.inject_run_context(clear_state=True)
def prepare_command(args: argparse.Namespace, config: TrainConfig, directory: Path) -> List[str]:
    fmt = InteractionFormat.from_name(args.format, has_header=args.header)
    try:
        rule = PositiveRule.parse(args.positive_rule) if args.positive_rule else None
    except ValueError as exc:
        raise UsageError(str(exc))
    interactions = load_interactions(args.input, fmt)
    try:
        graph = build_graph(interactions, args.min_user_deg, args.min_item_deg, rule, preset=args.preset)
    except ValueError as exc:
        raise UsageError(str(exc))
    kind = args.split or (PRESETS[args.preset].split_kind if args.preset else "popularity")
    split_seed = SeedStreams(config.seed).integer("split")
    if kind == "popularity":
        bundle = split_popularity(graph, args.ood_fraction, seed=split_seed)
    elif kind == "temporal":
        bundle = split_temporal(graph, args.ood_fraction)
    else:
        if not args.observed:
            raise UsageError("an exposure split needs --observed with the fully observed interactions")
        bundle = split_exposure(graph, _observed_edges(graph, args.observed, fmt), seed=split_seed)

    manifest = save_split(bundle, directory, extras={"source": str(args.input)})
    logger.info("Split written", kind=kind, counts=bundle.counts())
    return [manifest.name, *sorted(json.loads(manifest.read_text())["files"].values())]


@logger.inject_run_context(clear_state=True)
def synth_command(args: argparse.Namespace, config: TrainConfig, directory: Path) -> List[str]:
    streams = SeedStreams(config.seed)
    try:
        benchmark = generate_synthetic(
            n_users=args.n_users,
            n_items=args.n_items,
            noise_ratio=args.noise_ratio,
            minor_fraction=args.minor_fraction,
            feature_dim=config.feature_dim if args.with_features else None,
            seed=streams.integer("split"),
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    if args.split == "exposure":
        bundle = split_exposure(benchmark.graph, benchmark.fully_observed, seed=streams.integer("split", 1))
    else:
        bundle = split_popularity(benchmark.graph, args.ood_fraction, seed=streams.integer("split", 1))

    extras = {
        "synthetic": {
            "n_users": args.n_users,
            "n_items": args.n_items,
            "noise_ratio": args.noise_ratio,
            "minor_fraction": args.minor_fraction,
        },
        "clean_variance": benchmark.clean_variance,
        "noise_variance": benchmark.noise_variance,
    }
    manifest = save_split(bundle, directory, extras=extras)
    write_edges(directory / "noise.tsv", benchmark.noise_edges)
    np.save(directory / "user_groups.npy", benchmark.user_groups)
    files = json.loads(manifest.read_text())["files"].values()
    return [manifest.name, *sorted(files), "noise.tsv", "user_groups.npy"]


@logger.inject_run_context(clear_state=True)
def train_command(args: argparse.Namespace, config: TrainConfig, directory: Path) -> List[str]:
    split = load_split(args.split)
    model, history = train(config, split)
    model.save(directory / "model.ckpt", config)
    history.to_csv(directory / "history.csv")
    write_weight_trajectory(directory / "weights.csv", history.trajectory_rows())
    logger.info("Training finished", best_epoch=history.best_epoch, epochs=len(history))
    return ["model.ckpt", "history.csv", "weights.csv"]


@logger.inject_run_context(clear_state=True)
def evaluate_command(args: argparse.Namespace, config: TrainConfig, directory: Path) -> List[str]:
    split = load_split(args.split)
    arrays, metadata = read_checkpoint(args.checkpoint)
    model = DrgoModel.from_arrays(arrays, split.train, int(metadata.get("n_layers", config.n_layers)))
    rows = split_report(model.score_matrix(), split, args.ks)
    frame = pd.DataFrame(rows, columns=["test_set", "metric", "k", "value"])
    write_report(frame, directory / "report.csv")

    summary: Dict[str, Dict[str, float]] = {}
    for row in rows:
        summary.setdefault(row["test_set"], {})[f"{row['metric']}@{row['k']}"] = row["value"]
    (directory / "summary.json").write_text(dumps(summary, indent=2) + "\n")
    logger.info("Evaluation finished", summary=summary)
    return ["report.csv", "summary.json"]


def _sweep_split(args: argparse.Namespace, config: TrainConfig) -> SplitBundle:
    if args.split:
        return load_split(args.split)
    return grouped_benchmark(
        noise_ratio=0.0, seed=SeedStreams(config.seed).integer("split"), n_users=args.n_users, n_items=args.n_items
    ).split


@logger.inject_run_context(clear_state=True)
def sweep_noise_command(args: argparse.Namespace, config: TrainConfig, directory: Path) -> List[str]:
    frame = noise_robustness_sweep(config, _sweep_split(args, config), args.ratios, args.methods, args.ks)
    write_report(frame, directory / "sweep.csv")
    return ["sweep.csv"]


@logger.inject_run_context(clear_state=True)
def weights_fig_command(args: argparse.Namespace, config: TrainConfig, directory: Path) -> List[str]:
    grouped = grouped_benchmark(
        noise_ratio=args.noise_ratio,
        seed=SeedStreams(config.seed).integer("split"),
        n_users=args.n_users,
        n_items=args.n_items,
    )
    result = weight_trajectory_experiment(config, grouped)
    write_report(result.frame, directory / "trajectories.csv")
    artifacts = ["trajectories.csv"]
    for method, history in result.histories.items():
        name = f"weights_{method}.csv"
        write_weight_trajectory(directory / name, history.trajectory_rows())
        artifacts.append(name)
    logger.info("Final noise-group shares", **{method: result.final_share(method) for method in result.histories})
    return artifacts


@logger.inject_run_context(clear_state=True)
def diagnose_command(args: argparse.Namespace, config: TrainConfig, directory: Path) -> List[str]:
    if not 0.0 < args.noise_ratio < 1.0:
        raise UsageError(f"the variance diagnostic needs a noise ratio in (0, 1), got {args.noise_ratio}")
    blowup = pd.DataFrame(
        kl_blowup_demo(args.pairs, args.support_size, seed=config.seed, lam=config.sinkhorn_lambda),
        columns=["pair", "kl", "sinkhorn"],
    )
    write_report(blowup, directory / "kl_blowup.csv")

    benchmark = generate_synthetic(
        n_users=args.n_users,
        n_items=args.n_items,
        noise_ratio=args.noise_ratio,
        seed=SeedStreams(config.seed).integer("split"),
    )
    path = synthetic_variance_diagnostic(benchmark, seed=SeedStreams(config.seed).integer("eval"))
    write_report(pd.DataFrame(path, columns=["noisy_share", "variance"]), directory / "variance.csv")
    logger.info(
        "Diagnostics written",
        infinite_kl=int(np.isinf(blowup["kl"]).sum()),
        finite_sinkhorn=int(np.isfinite(blowup["sinkhorn"]).sum()),
        pairs=len(blowup),
    )
    return ["kl_blowup.csv", "variance.csv"]


@logger.inject_run_context(clear_state=True)
def grid_command(args: argparse.Namespace, config: TrainConfig, directory: Path) -> List[str]:
    values = {}
    for assignment in args.values or []:
        key, raw = _split_assignment(assignment)
        values[key.replace("-", "_")] = [item.strip() for item in raw.split(",") if item.strip()]
    keys = [key.strip().replace("-", "_") for key in args.keys.split(",") if key.strip()]
    frame = grid_sweep(config, load_split(args.split), keys, values, args.ks)
    write_report(frame, directory / "grid.csv")
    return ["grid.csv"]


@logger.inject_run_context(clear_state=True)
def ablate_command(args: argparse.Namespace, config: TrainConfig, directory: Path) -> List[str]:
    frame = ablation_study(config, load_split(args.split), args.ks)
    write_report(frame, directory / "ablation.csv")
    return ["ablation.csv"]


COMMANDS: Dict[str, Callable[..., List[str]]] = {
    "prepare": prepare_command,
    "synth": synth_command,
    "train": train_command,
    "evaluate": evaluate_command,
    "sweep-noise": sweep_noise_command,
    "weights-fig": weights_fig_command,
    "diagnose": diagnose_command,
    "grid": grid_command,
    "ablate": ablate_command,
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value or JSON configuration file")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE", help="configuration override, repeatable")
    parser.add_argument("--output", help="output directory")
    for name in TrainConfig.__fields__:
        parser.add_argument(f"--{name.replace('_', '-')}", dest=name, default=argparse.SUPPRESS, metavar="VALUE")


def _add_synthetic_size(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n-users", type=int, default=2000)
    parser.add_argument("--n-items", type=int, default=1500)


def build_parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(prog="drgo", description="Distributionally robust graph recommendation")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    prepare = commands.add_parser("prepare", help="interaction file -> split bundle")
    prepare.add_argument("--input", required=True)
    prepare.add_argument("--format", choices=["tsv", "csv"], default="tsv")
    prepare.add_argument("--header", action="store_true")
    prepare.add_argument("--preset", choices=sorted(PRESETS))
    prepare.add_argument("--min-user-deg", type=int, default=0)
    prepare.add_argument("--min-item-deg", type=int, default=0)
    prepare.add_argument("--positive-rule")
    prepare.add_argument("--split", choices=SPLIT_KINDS)
    prepare.add_argument("--ood-fraction", type=float, default=0.2)
    prepare.add_argument("--observed", help="fully observed interactions, for an exposure split")

    synth = commands.add_parser("synth", help="synthetic benchmark -> split bundle")
    _add_synthetic_size(synth)
    synth.add_argument("--noise-ratio", type=float, default=0.0)
    synth.add_argument("--minor-fraction", type=float, default=0.1)
    synth.add_argument("--with-features", action="store_true", help="node features of width --feature-dim")
    synth.add_argument("--split", choices=["exposure", "popularity"], default="exposure")
    synth.add_argument("--ood-fraction", type=float, default=0.2)

    train_parser = commands.add_parser("train", help="train on a split bundle")
    train_parser.add_argument("--split", required=True)

    evaluate = commands.add_parser("evaluate", help="rank test items with a checkpoint")
    evaluate.add_argument("--split", required=True)
    evaluate.add_argument("--checkpoint", required=True)
    evaluate.add_argument("--ks", type=_parse_ks, default=list(DEFAULT_KS))

    sweep = commands.add_parser("sweep-noise", help="robustness to injected edge noise")
    sweep.add_argument("--split", help="split bundle, a synthetic benchmark when omitted")
    _add_synthetic_size(sweep)
    sweep.add_argument("--ratios", type=_parse_ratios, default=[0.05, 0.10, 0.15, 0.25])
    sweep.add_argument("--methods", type=lambda value: value.split(","), default=list(METHODS))
    sweep.add_argument("--ks", type=_parse_ks, default=list(DEFAULT_KS))

    weights = commands.add_parser("weights-fig", help="group weight trajectories, plain DRO against DRGO")
    _add_synthetic_size(weights)
    weights.add_argument("--noise-ratio", type=float, default=0.1)

    diagnose = commands.add_parser("diagnose", help="KL blow-up demo and variance diagnostic")
    diagnose.add_argument("--pairs", type=int, default=50)
    diagnose.add_argument("--support-size", type=int, default=5)
    _add_synthetic_size(diagnose)
    diagnose.add_argument("--noise-ratio", type=float, default=0.1)

    grid = commands.add_parser("grid", help="hyperparameter grid sweep")
    grid.add_argument("--split", required=True)
    grid.add_argument("--keys", required=True, help="comma separated configuration keys")
    grid.add_argument("--values", action="append", metavar="KEY=V1,V2", help="explicit values for a key")
    grid.add_argument("--ks", type=_parse_ks, default=list(DEFAULT_KS))

    ablate = commands.add_parser("ablate", help="DRGO against its ablated variants")
    ablate.add_argument("--split", required=True)
    ablate.add_argument("--ks", type=_parse_ks, default=list(DEFAULT_KS))

    for subparser in commands.choices.values():
        _add_common(subparser)
    return parser


def error_record(exc: BaseException, exit_code: int) -> str:
    return dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": exit_code})


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns the process exit status

    0 on success, 2 for usage and configuration errors, 3 for data errors, 4 when training diverged.
    Failures write a JSON error record to stderr.
    """
    try:
        args = build_parser().parse_args(argv)
        config = resolve_config(args)
        directory = output_directory(args)
        artifacts = COMMANDS[args.command](args=args, config=config, directory=directory)
        write_manifest(directory, args.command, config, artifacts)
    except DrgoError as exc:
        sys.stderr.write(error_record(exc, exc.exit_code) + "\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(error_record(exc, DataError.exit_code) + "\n")
        return DataError.exit_code
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
