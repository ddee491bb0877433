"""Toy-data generation and Otsu binarization of real-valued data.

The toy corpus replicates four n=20 base patterns (all +1, all -1, the
two half/half splits) with independent sign flips.  Real-valued corpora
are mapped to {-1,+1} by Otsu's histogram threshold, applied per feature
column ("element" mode, the treatment for tabular data) or per sample
vector ("point" mode, the treatment for images).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .rbm import Dataset

OTSU_BINS = 256
BINARIZE_MODES = ("element", "point")


class DegenerateInputError(ValueError):
    """All values identical: no threshold separates anything."""


@dataclass(frozen=True)
class ToySpec:
    n: int = 20
    per_pattern: int = 100
    flip_prob: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.n % 2 != 0:
            raise ValueError("n must be an even integer >= 2")
        if self.per_pattern < 1:
            raise ValueError("per_pattern must be >= 1")
        if not (0.0 <= self.flip_prob <= 1.0):
            raise ValueError("flip_prob must lie in [0, 1]")


def base_patterns(n: int = 20) -> np.ndarray:
    """The four prototypes: all +1, all -1, half split and its reverse."""
    half = n // 2
    up = np.ones(n)
    split = np.concatenate([np.ones(half), -np.ones(half)])
    return np.stack([up, -up, split, -split]).astype(np.int8)


def gen_toy(spec: ToySpec = ToySpec()) -> Dataset:
    """per_pattern noisy copies of each base pattern (N = 4*per_pattern)."""
    rng = np.random.default_rng(spec.seed)
    patterns = base_patterns(spec.n)
    points = np.repeat(patterns, spec.per_pattern, axis=0).astype(np.int64)
    flips = rng.random(points.shape) < spec.flip_prob
    points[flips] *= -1
    return Dataset(
        points=points,
        source=f"toy(n={spec.n},per_pattern={spec.per_pattern},"
        f"flip_prob={spec.flip_prob},seed={spec.seed})",
    )


def otsu_threshold(values: Sequence[float]) -> float:
    """Threshold maximizing between-class variance over a 256-bin histogram.

    Returns the bin edge of the best split; ties break toward the lowest
    threshold.  Values equal to the threshold belong to the low class.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size < 2 or np.min(values) == np.max(values):
        raise DegenerateInputError("need at least two distinct values to threshold")
    counts, edges = np.histogram(values, bins=OTSU_BINS)
    centers = 0.5 * (edges[:-1] + edges[1:])
    weight = counts / counts.sum()
    w0 = np.cumsum(weight)[:-1]  # split after bin k, k = 0..bins-2
    w1 = 1.0 - w0
    mass = np.cumsum(weight * centers)
    mu_total = mass[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = mass[:-1] / w0
        mu1 = (mu_total - mass[:-1]) / w1
        between = w0 * w1 * (mu0 - mu1) ** 2
    between[~np.isfinite(between)] = -np.inf
    k = int(np.argmax(between))
    return float(edges[k + 1])


def binarize(values: np.ndarray, mode: str) -> Dataset:
    """Map real-valued samples (rows) to {-1,+1} by per-group Otsu thresholds.

    mode 'element': one threshold per feature column across samples;
    mode 'point': one threshold per sample across its own features.
    Constant groups cannot be thresholded and map to -1 with a warning.
    Entries strictly above their group threshold become +1, the rest -1.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.size == 0:
        raise ValueError("values must be a non-empty 2-D array (samples x features)")
    if mode not in BINARIZE_MODES:
        raise ValueError(f"mode must be one of {BINARIZE_MODES}, got {mode!r}")
    out = np.full(values.shape, -1, dtype=np.int8)
    axis_groups = values.T if mode == "element" else values
    for idx, group in enumerate(axis_groups):
        try:
            thr = otsu_threshold(group)
        except DegenerateInputError:
            warnings.warn(
                f"{mode} group {idx} is constant; mapped to -1", stacklevel=2
            )
            continue
        mask = group > thr
        if mode == "element":
            out[mask, idx] = 1
        else:
            out[idx, mask] = 1
    return Dataset(points=out, source=f"binarize(mode={mode})")


def load_values_csv(path: str) -> np.ndarray:
    """Real-valued CSV, one sample per row."""
    return np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
