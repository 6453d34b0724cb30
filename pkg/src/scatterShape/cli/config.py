"""Pipeline configuration read from a TOML document.

Missing tables and keys fall back to the component defaults, so an empty file
describes the desk-scale pipeline.
"""
import tomllib
import zlib
from pathlib import Path

import numpy as np

from ..core.materials import ELASTIC_PRESETS, STEEL, WATER, FluidMaterial
from ..core.nn import TrainConfig
from ..core.scatter import FREQUENCIES, N_ANGLES, REFERENCE_GRID, SolverConfig
from ..core.shape_generator import ShapeConfig
from ..errors import ConfigError

FLUID_PRESETS = {"water": WATER, "steel": STEEL}
STAGES = ("aae", "fnn", "inn")
STAGE_EPOCHS = {"aae": 200, "fnn": 300, "inn": 300}

ARTIFACTS = {
    "shapes": "shapes.shard",
    "farfields": "farfields.shard",
    "manifest": "manifest.json",
    "failures": "simulate_failures.csv",
    "oracle": "mie_agreement.csv",
    "aae": "aae.ckpt",
    "fnn": "fnn.ckpt",
    "inn": "inn.ckpt",
}


def _fluid(value):
    if isinstance(value, dict):
        return FluidMaterial(value)
    if value not in FLUID_PRESETS:
        raise ConfigError(f"unknown fluid material {value!r}, expected one of {', '.join(FLUID_PRESETS)}")
    return FLUID_PRESETS[value]


class PipelineConfig:
    def __init__(self, config=None):
        # Set default configuration
        self.set_default_config()

        # Update configuration
        if config:
            for attr, val in config.items():
                if not hasattr(self, attr):
                    raise ConfigError(f"unknown configuration table [{attr}]")
                setattr(self, attr, val)

        # Calculate properties
        self.init_properties()

    def set_default_config(self):
        self.dataset = {"count": 2000, "ratios": [0.8, 0.1, 0.1], "oracle_radii": [0.3, 0.5, 0.7],
                        "oracle_grid": REFERENCE_GRID}
        self.shapes = {}
        self.solver = {}
        self.materials = {"background": "water", "scatterer": "steel", "elastic": "steel"}
        self.training = {}
        self.frequencies = {"hz": list(FREQUENCIES)}
        self.angular = {"count": N_ANGLES, "halfplane": [0.0, 180.0]}
        self.paths = {"out": "runs/desk"}
        self.seeds = {"base": 1}
        self.jobs = 1

    def init_properties(self):
        self.frequency_list = [float(f) for f in self.frequencies.get("hz", FREQUENCIES)]
        if not self.frequency_list or any(f <= 0 for f in self.frequency_list):
            raise ConfigError(f"frequencies must be a nonempty list of positive values, got {self.frequency_list}")
        self.n_angles = int(self.angular.get("count", N_ANGLES))
        self.halfplane = tuple(float(v) for v in self.angular.get("halfplane", (0.0, 180.0)))
        if len(self.halfplane) != 2:
            raise ConfigError(f"angular.halfplane must be [lo, hi], got {list(self.halfplane)}")
        self.count = int(self.dataset.get("count", 2000))
        if self.count < 0:
            raise ConfigError(f"dataset.count must be non-negative, got {self.count}")
        self.ratios = tuple(self.dataset.get("ratios", (0.8, 0.1, 0.1)))
        self.oracle_radii = tuple(self.dataset.get("oracle_radii", (0.3, 0.5, 0.7)))
        self.oracle_grid = int(self.dataset.get("oracle_grid", REFERENCE_GRID))
        self.base_seed = int(self.seeds.get("base", 1))
        self.out = Path(self.paths.get("out", "runs/desk"))

        self.shape_config = ShapeConfig(self.shapes)
        self.solver_config = SolverConfig({
            **self.solver, "frequencies": self.frequency_list, "n_angles": self.n_angles,
        })
        self.background = _fluid(self.materials.get("background", "water"))
        self.scatterer = _fluid(self.materials.get("scatterer", "steel"))
        elastic = self.materials.get("elastic", "steel")
        if elastic not in ELASTIC_PRESETS:
            raise ConfigError(f"unknown elastic material {elastic!r}, expected one of {', '.join(ELASTIC_PRESETS)}")
        self.elastic = ELASTIC_PRESETS[elastic]
        unknown = set(self.training) - set(STAGES)
        if unknown:
            raise ConfigError(f"unknown training stages {sorted(unknown)}")
        self.train_configs = {stage: self._train_config(stage) for stage in STAGES}

    def _train_config(self, stage):
        values = {"epochs": STAGE_EPOCHS[stage], "seed": self.seed(stage)}
        values.update(self.training.get(stage, {}))
        return TrainConfig(values)

    def seed(self, name):
        """Stage seed derived from the base seed and the stage name"""
        key = zlib.crc32(name.encode())
        return int(np.random.SeedSequence([self.base_seed, key]).generate_state(1)[0])

    def artifact(self, name):
        return self.out / ARTIFACTS.get(name, name)

    def apply_overrides(self, seed=None, out=None, jobs=None):
        if seed is not None:
            self.seeds = {**self.seeds, "base": seed}
        if out is not None:
            self.paths = {**self.paths, "out": str(out)}
        if jobs is not None:
            self.jobs = jobs
        self.init_properties()
        return self

    def snapshot(self):
        return {
            "dataset": {"count": self.count, "ratios": list(self.ratios)},
            "shapes": self.shape_config.to_dict(),
            "solver": self.solver_config.to_dict(),
            "materials": {"background": self.background.to_dict(), "scatterer": self.scatterer.to_dict()},
            "training": {stage: cfg.to_dict() for stage, cfg in self.train_configs.items()},
            "seeds": {"base": self.base_seed},
        }


def load_config(path=None):
    """PipelineConfig from a TOML file; defaults when path is None"""
    if path is None:
        return PipelineConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    try:
        with open(path, "rb") as fh:
            document = tomllib.load(fh)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"{path}: {err}") from err
    return PipelineConfig(document)
