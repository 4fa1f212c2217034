"""Constants and initial data of the two-Gaussian clustering model (model M1)."""
import numpy as np

BETA = 100.0
RADIUS = 0.2
COUNTING_BINS = 41
CLUSTER_CENTERS = (0.07, 0.33, 0.66, 0.90)


def two_gaussian(x):
    """Unnormalised bimodal density on [0, 1], heavier bump at 0.25."""
    x = np.asarray(x, dtype=float)
    c = 1.0 / np.sqrt(0.4 * np.pi)
    val = 3.5 * c * np.exp(-5.0 * (x - 0.25) ** 2 / 4.0) + c * np.exp(-5.0 * (x - 0.90) ** 2 / 4.0)
    return np.where((x >= 0.0) & (x <= 1.0), val, 0.0)


def two_gaussian_normalizer(points: int = 200_000) -> float:
    """Integral of :func:`two_gaussian` over [0, 1] by the midpoint rule."""
    h = 1.0 / points
    return float(two_gaussian(h * (np.arange(points) + 0.5)).sum() * h)
