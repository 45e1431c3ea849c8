"""Builtin low-level patch descriptor (12 values) for desk-scale runs."""
import numpy as np

from src.features.image import to_luminance

LOWLEVEL_DIM = 12
HISTOGRAM_BINS = 6
# Largest forward-difference gradient magnitude an 8-bit patch can reach.
MAX_GRADIENT = 255.0 * np.sqrt(2.0)

LOWLEVEL_NAMES = (
    "mean_luminance",
    "luminance_std",
    "mean_abs_dx",
    "mean_abs_dy",
    "gradient_energy",
    "high_frequency_ratio",
) + tuple(f"gradient_hist_{i}" for i in range(HISTOGRAM_BINS))


def builtin_lowlevel_features(patch: np.ndarray) -> np.ndarray:
    """Luminance, difference, gradient-energy and gradient-histogram statistics.

    Layout: [mean, std, mean|dx|, mean|dy|, mean squared forward difference,
    Laplacian energy / variance, 6-bin normalised gradient-magnitude histogram].
    A constant patch maps to [value, 0, ..., 0].
    """
    y = to_luminance(patch)
    if y.ndim != 2 or y.shape[0] != y.shape[1]:
        raise ValueError(f"Expected a square patch, got shape {y.shape}")
    if y.shape[0] < 2:
        raise ValueError("Patch size must be at least 2")

    dx = np.diff(y, axis=1)
    dy = np.diff(y, axis=0)
    mean = y.mean()
    variance = np.mean((y - mean) ** 2)

    gradient_energy = (np.sum(dx * dx) + np.sum(dy * dy)) / (dx.size + dy.size)

    hf_ratio = 0.0
    if variance > 0 and y.shape[0] >= 3:
        lap = (y[1:-1, :-2] + y[1:-1, 2:] + y[:-2, 1:-1] + y[2:, 1:-1]
               - 4.0 * y[1:-1, 1:-1])
        hf_ratio = np.mean(lap * lap) / variance

    hist = np.zeros(HISTOGRAM_BINS)
    if variance > 0:
        magnitude = np.hypot(dx[:-1, :], dy[:, :-1])
        counts, _ = np.histogram(magnitude, bins=HISTOGRAM_BINS, range=(0.0, MAX_GRADIENT))
        hist = counts / magnitude.size

    return np.concatenate((
        [mean, np.sqrt(variance), np.mean(np.abs(dx)), np.mean(np.abs(dy)),
         gradient_energy, hf_ratio],
        hist,
    ))
