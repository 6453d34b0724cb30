"""Input selections for the reduced-data studies and the matching network widths."""
import numpy as np

from ...errors import ConfigError, ShapeMismatchError
from ..scatter import N_ANGLES
from .fnn import FNN_WIDTHS
from .inn import INN_WIDTHS

ANGLE_TOLERANCE = 1e-9  # deg

# Forward and inverse widths per number of frequency blocks k; widths[-1] / widths[0] = 87·k
FNN_VARIANT_WIDTHS = {
    1: (4096, 500, 500, 500, 400, 400, 87),
    2: (4096, 500, 500, 500, 400, 174),
    3: (4096, 500, 500, 500, 400, 400, 261),
    4: (4096, 800, 800, 800, 800, 600, 600, 348),
    5: FNN_WIDTHS,
}
INN_VARIANT_WIDTHS = {
    1: (87, 800, 500, 500, 500, 400, 100),
    2: (174, 800, 800, 500, 500, 500, 400, 100),
    3: (261, 800, 800, 500, 500, 500, 400, 100),
    4: (348, 800, 800, 500, 500, 500, 400, 100),
    5: INN_WIDTHS,
}


def kept_angles(lo, hi, n_angles=N_ANGLES):
    """Boolean mask over θ_m = 360°·m/M selecting lo ≤ θ_m ≤ hi"""
    if not (0 <= lo < hi <= 360):
        raise ConfigError(f"angular range must satisfy 0 <= lo < hi <= 360, got [{lo}, {hi}]")
    theta = 360.0 * np.arange(n_angles) / n_angles
    keep = (theta >= lo - ANGLE_TOLERANCE) & (theta <= hi + ANGLE_TOLERANCE)
    if not keep.any():
        raise ConfigError(f"angular range [{lo}, {hi}] contains none of the {n_angles} angles")
    return keep


def angular_mask(farfield, lo, hi, n_angles=N_ANGLES):
    """Keep only angles in [lo, hi] degrees within every frequency block"""
    F = np.asarray(farfield)
    if F.shape[-1] % n_angles:
        raise ShapeMismatchError(f"far-field width {F.shape[-1]} is not a multiple of {n_angles} angles")
    blocks = F.shape[-1] // n_angles
    keep = np.tile(kept_angles(lo, hi, n_angles), blocks)
    return F[..., keep]


def frequency_block_select(farfield, blocks, n_angles=N_ANGLES):
    """First `blocks` frequency blocks, or the listed block indices"""
    F = np.asarray(farfield)
    total = F.shape[-1] // n_angles
    indices = list(range(blocks)) if np.isscalar(blocks) else list(blocks)
    if not indices or min(indices) < 0 or max(indices) >= total:
        raise ConfigError(f"frequency blocks {blocks} out of range for {total} blocks")
    columns = np.concatenate([np.arange(i * n_angles, (i + 1) * n_angles) for i in indices])
    return F[..., columns]


def frequency_variant_widths(k):
    """(FNN widths, INN widths) for k frequency blocks"""
    if k not in FNN_VARIANT_WIDTHS:
        raise ConfigError(f"no network variant for {k} frequency blocks")
    return FNN_VARIANT_WIDTHS[k], INN_VARIANT_WIDTHS[k]


def halfplane_widths(width):
    """(FNN widths, INN widths) for a masked far field of the given width"""
    return (4096, 1000, 1000, 800, 800, 600, 600, width), (width, 800, 800, 500, 500, 400, 100)
