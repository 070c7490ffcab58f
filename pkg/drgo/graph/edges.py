from dataclasses import dataclass
from typing import FrozenSet, Iterator, List, Optional, Tuple

import numpy as np

from .exceptions import InvalidEdgesError


@dataclass(frozen=True, eq=False)
class EdgeSet:
    """Unique (user, item, timestamp) triples over dense indices, sorted by (user, item)

    Use `EdgeSet.from_arrays` to build one; it sorts, checks uniqueness and freezes the arrays.
    """

    users: np.ndarray
    items: np.ndarray
    timestamps: np.ndarray

    @classmethod
    def from_arrays(cls, users, items, timestamps=None) -> "EdgeSet":
        users = np.asarray(users, dtype=np.int64).reshape(-1)
        items = np.asarray(items, dtype=np.int64).reshape(-1)
        if timestamps is None:
            timestamps = np.zeros(users.shape[0], dtype=np.int64)
        timestamps = np.asarray(timestamps, dtype=np.int64).reshape(-1)
        if not (users.shape == items.shape == timestamps.shape):
            raise InvalidEdgesError(
                f"users, items and timestamps must have equal length, got {users.shape}, {items.shape}, "
                f"{timestamps.shape}"
            )
        if users.size and (users.min() < 0 or items.min() < 0):
            raise InvalidEdgesError("edge indices must be non-negative")

        order = np.lexsort((items, users))
        users, items, timestamps = users[order], items[order], timestamps[order]
        if users.size > 1:
            same = (users[1:] == users[:-1]) & (items[1:] == items[:-1])
            if same.any():
                first = int(np.flatnonzero(same)[0])
                raise InvalidEdgesError(f"duplicate edge ({users[first]}, {items[first]})")

        for array in (users, items, timestamps):
            array.setflags(write=False)
        return cls(users=users, items=items, timestamps=timestamps)

    @classmethod
    def empty(cls) -> "EdgeSet":
        return cls.from_arrays(np.empty(0), np.empty(0))

    def __len__(self) -> int:
        return int(self.users.shape[0])

    def __iter__(self) -> Iterator[Tuple[int, int]]:
        return zip(self.users.tolist(), self.items.tolist())

    def pairs(self) -> np.ndarray:
        """(E, 2) array of (user, item) rows"""
        return np.stack([self.users, self.items], axis=1)

    def keys(self, n_items: int) -> np.ndarray:
        """Scalar key per edge, user * n_items + item; sorted since edges are"""
        return self.users * np.int64(n_items) + self.items

    def as_set(self) -> FrozenSet[Tuple[int, int]]:
        return frozenset(self)

    def subset(self, selector) -> "EdgeSet":
        """Edges at a boolean mask or index array, still unique and sorted"""
        return EdgeSet.from_arrays(self.users[selector], self.items[selector], self.timestamps[selector])

    def contains(self, users, items, n_items: int) -> np.ndarray:
        """Boolean mask telling which (users[k], items[k]) pairs are edges of this set"""
        query = np.asarray(users, dtype=np.int64) * np.int64(n_items) + np.asarray(items, dtype=np.int64)
        own = self.keys(n_items)
        if not len(own):
            return np.zeros(query.shape, dtype=bool)
        position = np.minimum(np.searchsorted(own, query), len(own) - 1)
        return own[position] == query

    def difference(self, other: "EdgeSet", n_items: int) -> "EdgeSet":
        return self.subset(~other.contains(self.users, self.items, n_items))

    def union(self, *others: "EdgeSet") -> "EdgeSet":
        """Union of disjoint edge sets; overlapping edges raise InvalidEdgesError"""
        parts = (self,) + others
        return EdgeSet.from_arrays(
            np.concatenate([part.users for part in parts]),
            np.concatenate([part.items for part in parts]),
            np.concatenate([part.timestamps for part in parts]),
        )

    def items_by_user(self, n_users: int) -> List[np.ndarray]:
        """Sorted item indices per user"""
        bounds = np.searchsorted(self.users, np.arange(n_users + 1))
        return [self.items[bounds[u] : bounds[u + 1]] for u in range(n_users)]

    def max_index(self) -> Optional[Tuple[int, int]]:
        if not len(self):
            return None
        return int(self.users.max()), int(self.items.max())
