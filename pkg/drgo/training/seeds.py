from typing import Tuple

import numpy as np

SUBSTREAMS: Tuple[str, ...] = ("split", "init", "sampling", "diffusion", "noise", "cluster", "eval")


class SeedStreams:
    """Independent named random streams derived from one root seed

    A stream is identified by its name and optional integer keys (an epoch, a sweep cell), so the
    same name and keys always give the same generator.

    Example
    -------
        >>> streams = SeedStreams(7)
        >>> sampler = streams.generator("sampling")
        >>> epoch_noise = streams.generator("diffusion", 3)
    """

    def __init__(self, seed: int):
        self.seed = int(seed)

    def sequence(self, name: str, *keys: int) -> np.random.SeedSequence:
        if name not in SUBSTREAMS:
            raise KeyError(f"unknown random stream {name!r}, expected one of {', '.join(SUBSTREAMS)}")
        return np.random.SeedSequence(self.seed, spawn_key=(SUBSTREAMS.index(name), *map(int, keys)))

    def generator(self, name: str, *keys: int) -> np.random.Generator:
        return np.random.default_rng(self.sequence(name, *keys))

    def integer(self, name: str, *keys: int) -> int:
        """A derived integer seed for APIs that take one"""
        return int(self.sequence(name, *keys).generate_state(1)[0])
