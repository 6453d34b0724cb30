"""Image and far-field error measures and their aggregation into reports."""
import numpy as np

from ..errors import ShapeMismatchError
from .nn.losses import loss_bce

SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2
RELATIVE_GUARD = 1e-8
HISTOGRAM_BINS = 32


def _pair(x, y):
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise ShapeMismatchError(f"cannot compare images of {x.size} and {y.size} pixels")
    return x, y


def ssim(x, y):
    """Whole-image SSIM with sample (N-1) variances and covariance, dynamic range 1"""
    x, y = _pair(x, y)
    if x.size == 0:
        raise ShapeMismatchError("cannot compare empty images")
    # A single pixel has zero variance; only the luminance term remains
    norm = max(x.size - 1, 1)
    mx, my = x.mean(), y.mean()
    dx, dy = x - mx, y - my
    var_x = np.sum(dx * dx) / norm
    var_y = np.sum(dy * dy) / norm
    cov = np.sum(dx * dy) / norm
    return float(
        (2 * mx * my + SSIM_C1) * (2 * cov + SSIM_C2)
        / ((mx * mx + my * my + SSIM_C1) * (var_x + var_y + SSIM_C2))
    )


def bce_error(target, prediction):
    target, prediction = _pair(target, prediction)
    return loss_bce(target, prediction)[0]


def relative_abs_error(target, prediction):
    """mean_i |F_i - F̂_i| / (|F_i| + 1e-8)"""
    target, prediction = _pair(target, prediction)
    return float(np.mean(np.abs(target - prediction) / (np.abs(target) + RELATIVE_GUARD)))


def per_sample(metric, targets, predictions):
    if len(targets) != len(predictions):
        raise ShapeMismatchError(f"{len(targets)} targets but {len(predictions)} predictions")
    return np.array([metric(t, p) for t, p in zip(targets, predictions)])


class MetricsReport:
    def __init__(self, name, split, values, mean, median, histogram, edges):
        self.name = name
        self.split = split
        self.values = values
        self.mean = mean
        self.median = median
        self.histogram = histogram
        self.edges = edges

    @property
    def count(self):
        return len(self.values)

    def to_dict(self):
        return {
            "name": self.name,
            "split": self.split,
            "mean": self.mean,
            "median": self.median,
            "histogram": self.histogram.tolist(),
            "edges": self.edges.tolist(),
        }


def aggregate(values, split, name=""):
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.size == 0:
        raise ValueError(f"cannot aggregate an empty {name or 'metric'} sample for split {split!r}")
    histogram, edges = np.histogram(values, bins=HISTOGRAM_BINS)
    return MetricsReport(name, split, values, float(values.mean()), float(np.median(values)), histogram, edges)


def summarize(report):
    v = report.values
    return {
        "mean": report.mean,
        "median": report.median,
        "std": float(v.std()),
        "min": float(v.min()),
        "max": float(v.max()),
        "count": report.count,
    }


def shape_reports(targets, predictions, split):
    """SSIM and BCE reports for binary targets against [0, 1] predictions thresholded at 0.5"""
    binary = (np.asarray(predictions) >= 0.5).astype(float)
    return {
        "ssim": aggregate(per_sample(ssim, targets, binary), split, "ssim"),
        "bce": aggregate(per_sample(bce_error, targets, binary), split, "bce"),
    }
