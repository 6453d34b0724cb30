import numpy as np
from scipy import ndimage

from ...errors import ShapeMismatchError

GRID = 64
DOMAIN_SIZE = 2.0  # m


def pixel_centers(grid=GRID, domain_size=DOMAIN_SIZE):
    """Return (X, Y) center coordinates, indexed [row, col] with rows along y.

    The domain is centered on the origin, so the grid is mirror symmetric
    about both axes.
    """
    h = domain_size / grid
    axis = -domain_size / 2 + h * (np.arange(grid) + 0.5)
    X, Y = np.meshgrid(axis, axis)
    return X, Y


class BinaryImage:
    """A grid of {0,1} pixel occupancies over a square physical domain"""

    def __init__(self, pixels, domain_size=DOMAIN_SIZE):
        pixels = np.asarray(pixels)
        if pixels.ndim != 2 or pixels.shape[0] != pixels.shape[1]:
            raise ShapeMismatchError(f"image must be square, got shape {pixels.shape}")
        if not np.isin(pixels, (0, 1)).all():
            raise ValueError("image pixels must be exactly 0 or 1")
        self.pixels = pixels.astype(np.uint8)
        self.domain_size = float(domain_size)

    @classmethod
    def empty(cls, grid=GRID, domain_size=DOMAIN_SIZE):
        return cls(np.zeros((grid, grid), dtype=np.uint8), domain_size)

    @classmethod
    def from_vector(cls, vector, domain_size=DOMAIN_SIZE):
        vector = np.asarray(vector)
        grid = int(round(np.sqrt(vector.size)))
        return cls(vector.reshape(grid, grid), domain_size)

    @property
    def grid(self):
        return self.pixels.shape[0]

    @property
    def pixel_size(self):
        return self.domain_size / self.grid

    @property
    def count(self):
        return int(self.pixels.sum())

    @property
    def fill_fraction(self):
        return self.count / self.pixels.size

    def flatten(self):
        return self.pixels.reshape(-1)

    def is_connected(self):
        """True when the set pixels form a single 4-adjacent component"""
        _, components = ndimage.label(self.pixels)
        return components == 1

    def __eq__(self, other):
        if not isinstance(other, BinaryImage):
            return NotImplemented
        return self.domain_size == other.domain_size and np.array_equal(self.pixels, other.pixels)

    def __repr__(self):
        return f"BinaryImage(grid={self.grid}, set={self.count})"


def rasterize(curve, grid=GRID, domain_size=DOMAIN_SIZE):
    """Set every pixel whose center lies strictly inside the curve"""
    X, Y = pixel_centers(grid, domain_size)
    return BinaryImage(curve.contains(X, Y).astype(np.uint8), domain_size)


def threshold(values, level=0.5):
    """Binarize a real-valued image or vector"""
    return (np.asarray(values) >= level).astype(np.uint8)
