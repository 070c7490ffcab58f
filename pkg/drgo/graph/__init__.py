"""Interaction data, bipartite graphs, OOD splits, edge noise and betweenness centrality
"""
from .centrality import betweenness_centrality, betweenness_from_adjacency
from .edges import EdgeSet
from .exceptions import (
    EmptyGraphError,
    GraphError,
    InteractionParseError,
    InvalidEdgesError,
    NoiseInjectionError,
    SplitError,
)
from .graph import InteractionGraph, build_graph, normalized_adjacency
from .interactions import Interaction, InteractionFormat, load_interactions
from .io import load_split, read_edges, save_split, write_edges
from .noise import NoisyGraph, corrupt_edges, inject_noise
from .presets import PRESETS, PositiveRule, Preset, preset_rule
from .splits import SplitBundle, split_exposure, split_popularity, split_temporal
from .synthetic import SyntheticBenchmark, generate_synthetic

__all__ = [
    "EdgeSet",
    "EmptyGraphError",
    "GraphError",
    "Interaction",
    "InteractionFormat",
    "InteractionGraph",
    "InteractionParseError",
    "InvalidEdgesError",
    "NoiseInjectionError",
    "NoisyGraph",
    "PRESETS",
    "PositiveRule",
    "Preset",
    "SplitBundle",
    "SplitError",
    "SyntheticBenchmark",
    "betweenness_centrality",
    "betweenness_from_adjacency",
    "build_graph",
    "corrupt_edges",
    "generate_synthetic",
    "inject_noise",
    "load_interactions",
    "load_split",
    "normalized_adjacency",
    "preset_rule",
    "read_edges",
    "save_split",
    "split_exposure",
    "split_popularity",
    "split_temporal",
    "write_edges",
]
