import logging

import numpy as np

from ..errors import ConfigError
from .geometry import BoundaryCurve, rasterize

log = logging.getLogger(__name__)

MAX_ATTEMPTS = 1000


class ShapeConfig:
    def __init__(self, config=None):
        # Set default configuration
        self.set_default_config()

        # Update configuration
        if config:
            for attr, val in config.items():
                setattr(self, attr, val)

        # Calculate properties
        self.init_properties()

    def set_default_config(self):
        """Set default configuration"""
        self.grid = 64
        self.domain_size = 2.0  # m
        self.base_radius_min = 0.3  # m
        self.base_radius_max = 0.7  # m
        self.harmonics_min = 2
        self.harmonics_max = 8
        self.max_order = 8
        # Cap on Σ|a_k|
        self.amplitude_cap = 0.25  # m
        # Smallest radius a sampled curve may reach
        self.min_radius = 0.05  # m
        self.center = (0.0, 0.0)
        self.fill_band = (0.02, 0.6)

    def init_properties(self):
        self.grid = int(self.grid)
        self.harmonics_min = int(self.harmonics_min)
        self.harmonics_max = int(self.harmonics_max)
        self.max_order = int(self.max_order)
        self.center = tuple(float(c) for c in self.center)
        self.fill_band = tuple(float(b) for b in self.fill_band)

        for name in ("domain_size", "base_radius_min", "base_radius_max", "min_radius"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"shapes.{name} must be positive, got {getattr(self, name)}")
        if self.amplitude_cap < 0:
            raise ConfigError(f"shapes.amplitude_cap must be non-negative, got {self.amplitude_cap}")
        if self.base_radius_min > self.base_radius_max:
            raise ConfigError(
                f"shapes.base_radius_min {self.base_radius_min} exceeds "
                f"base_radius_max {self.base_radius_max}"
            )
        if self.amplitude_cap >= self.base_radius_min:
            raise ConfigError(
                f"shapes.amplitude_cap {self.amplitude_cap} must stay below "
                f"base_radius_min {self.base_radius_min} to keep the radius positive"
            )
        if not 0 <= self.harmonics_min <= self.harmonics_max <= self.max_order:
            raise ConfigError(
                f"need 0 <= harmonics_min ({self.harmonics_min}) <= harmonics_max "
                f"({self.harmonics_max}) <= max_order ({self.max_order})"
            )
        extent = self.base_radius_max + self.amplitude_cap + max(abs(c) for c in self.center)
        if extent > self.domain_size / 2:
            raise ConfigError(
                f"largest shape extent {extent} m does not fit in half the domain "
                f"({self.domain_size / 2} m)"
            )

    def to_dict(self):
        return {
            "grid": self.grid,
            "domain_size": self.domain_size,
            "base_radius_min": self.base_radius_min,
            "base_radius_max": self.base_radius_max,
            "harmonics_min": self.harmonics_min,
            "harmonics_max": self.harmonics_max,
            "max_order": self.max_order,
            "amplitude_cap": self.amplitude_cap,
            "min_radius": self.min_radius,
            "center": list(self.center),
            "fill_band": list(self.fill_band),
        }


def _draw_harmonics(rng, cfg):
    count = int(rng.integers(cfg.harmonics_min, cfg.harmonics_max + 1))
    if count == 0 or cfg.amplitude_cap == 0:
        return []
    orders = np.sort(rng.choice(np.arange(1, cfg.max_order + 1), size=count, replace=False))
    # Higher orders get smaller weights so boundaries stay blob-like
    weights = rng.uniform(0.0, 1.0, size=count) / orders
    total = cfg.amplitude_cap * rng.uniform(0.0, 1.0)
    amplitudes = total * weights / weights.sum()
    phases = rng.uniform(0.0, 2 * np.pi, size=count)
    return list(zip(orders.tolist(), amplitudes.tolist(), phases.tolist()))


def sample_boundary(seed, cfg=None):
    """Draw a random star-shaped boundary; a pure function of (seed, cfg)"""
    cfg = cfg if cfg is not None else ShapeConfig()
    rng = np.random.default_rng(seed)
    for _ in range(MAX_ATTEMPTS):
        base = float(rng.uniform(cfg.base_radius_min, cfg.base_radius_max))
        curve = BoundaryCurve(base, _draw_harmonics(rng, cfg), cfg.center)
        if curve.min_radius() >= cfg.min_radius and curve.fits_in(cfg.domain_size):
            return curve
    raise ConfigError(f"no admissible boundary after {MAX_ATTEMPTS} draws for seed {seed}")


def shape_seed(seed, index):
    """Per-sample 64-bit seed derived from the dataset seed"""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1, np.uint64)[0])


class ShapeGenerator:
    """Produces the training-shape distribution as rasterized images"""

    def __init__(self, config=None):
        self.config = config if isinstance(config, ShapeConfig) else ShapeConfig(config)

    def curve(self, seed, index):
        return sample_boundary(shape_seed(seed, index), self.config)

    def image(self, seed, index):
        return rasterize(self.curve(seed, index), self.config.grid, self.config.domain_size)

    def generate(self, count, seed):
        images = [self.image(seed, i) for i in range(count)]
        if images:
            fills = np.array([im.fill_fraction for im in images])
            lo, hi = self.config.fill_band
            log.info(
                "generated %d shapes, fill fraction mean %.3f (min %.3f, max %.3f)",
                count, fills.mean(), fills.min(), fills.max(),
            )
            outside = np.count_nonzero((fills < lo) | (fills > hi))
            if outside:
                log.warning("%d shapes fall outside the fill band [%g, %g]", outside, lo, hi)
        return images
