import hashlib
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from .shards import shard_info
from .tables import read_json, write_json

SPLITS = ("train", "val", "test")
DEFAULT_RATIOS = (0.8, 0.1, 0.1)


class Manifest:
    def __init__(self, dataset_id, shards, splits, seed, solver=None):
        self.dataset_id = dataset_id
        self.shards = dict(shards)
        self.splits = {name: list(map(int, idx)) for name, idx in splits.items()}
        self.seed = seed
        self.solver = dict(solver or {})

    @property
    def count(self):
        return sum(len(v) for v in self.splits.values())

    def indices(self, split):
        if split not in self.splits:
            raise ConfigError(f"unknown split {split!r}, expected one of {', '.join(self.splits)}")
        return np.array(self.splits[split], dtype=int)

    def validate(self):
        """Splits must be pairwise disjoint and cover 0..count-1"""
        seen = np.concatenate([self.indices(s) for s in self.splits]) if self.splits else np.zeros(0, int)
        if len(np.unique(seen)) != len(seen) or not np.array_equal(np.sort(seen), np.arange(len(seen))):
            raise ConfigError(f"manifest {self.dataset_id} splits are not a disjoint cover of the records")
        return self

    def to_dict(self):
        return {
            "dataset_id": self.dataset_id,
            "shards": {k: str(v) for k, v in self.shards.items()},
            "splits": self.splits,
            "seed": self.seed,
            "solver": self.solver,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data["dataset_id"], data["shards"], data["splits"], data["seed"], data.get("solver"))


def split_sizes(count, ratios):
    if len(ratios) != len(SPLITS) or any(r < 0 for r in ratios) or abs(sum(ratios) - 1) > 1e-9:
        raise ConfigError(f"split ratios must be three non-negative values summing to 1, got {list(ratios)}")
    train = int(round(ratios[0] * count))
    val = min(int(round(ratios[1] * count)), count - train)
    return train, val, count - train - val


def build_manifest(shards, seed, ratios=DEFAULT_RATIOS, count=None, solver=None):
    """Deterministic seeded split of the records in `shards` (name -> path)"""
    if count is None:
        count = shard_info(next(iter(shards.values())))[1]
    sizes = split_sizes(count, ratios)
    order = np.random.default_rng(seed).permutation(count)
    bounds = np.cumsum((0,) + sizes)
    splits = {name: sorted(order[bounds[i]:bounds[i + 1]].tolist()) for i, name in enumerate(SPLITS)}
    digest = hashlib.sha256(f"{seed}:{count}:{sorted(Path(p).name for p in shards.values())}".encode())
    return Manifest(digest.hexdigest()[:16], shards, splits, seed, solver).validate()


def save_manifest(manifest, path):
    write_json(path, manifest.to_dict())


def load_manifest(path):
    return Manifest.from_dict(read_json(path)).validate()
