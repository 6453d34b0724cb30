from math import pi

import numpy as np

# Angular samples used to bound the radius from below
DENSE_SAMPLES = 4096


class BoundaryCurve:
    """Star-shaped closed curve r(θ) = r0 + Σ a_k cos(n_k θ + φ_k) around a center."""

    def __init__(self, base_radius, harmonics=(), center=(0.0, 0.0)):
        self.base_radius = float(base_radius)
        self.harmonics = [(int(n), float(a), float(p)) for n, a, p in harmonics]
        self.center = (float(center[0]), float(center[1]))

        self._orders = np.array([h[0] for h in self.harmonics], dtype=float)
        self._amplitudes = np.array([h[1] for h in self.harmonics], dtype=float)
        self._phases = np.array([h[2] for h in self.harmonics], dtype=float)

    def radius(self, theta):
        theta = np.asarray(theta, dtype=float)
        if len(self.harmonics) == 0:
            return np.full_like(theta, self.base_radius)
        terms = self._amplitudes * np.cos(np.multiply.outer(theta, self._orders) + self._phases)
        return self.base_radius + terms.sum(axis=-1)

    @property
    def total_amplitude(self):
        return float(np.abs(self._amplitudes).sum())

    @property
    def max_extent(self):
        """Upper bound on the distance of any boundary point from the center"""
        return self.base_radius + self.total_amplitude

    def min_radius(self, samples=DENSE_SAMPLES):
        theta = np.linspace(0, 2 * pi, samples, endpoint=False)
        return float(self.radius(theta).min())

    def contains(self, x, y):
        """Point-in-star-shape test: polar radius below the curve radius at that angle"""
        dx = np.asarray(x, dtype=float) - self.center[0]
        dy = np.asarray(y, dtype=float) - self.center[1]
        rho = np.hypot(dx, dy)
        return rho < self.radius(np.arctan2(dy, dx))

    def fits_in(self, domain_size):
        """Whole curve inside the centered square domain"""
        cx, cy = self.center
        return self.max_extent + max(abs(cx), abs(cy)) <= domain_size / 2

    def __repr__(self):
        return (
            f"BoundaryCurve(base_radius={self.base_radius:.4f}, "
            f"harmonics={len(self.harmonics)}, center={self.center})"
        )

    def __eq__(self, other):
        if not isinstance(other, BoundaryCurve):
            return NotImplemented
        return (
            self.base_radius == other.base_radius
            and self.harmonics == other.harmonics
            and self.center == other.center
        )
