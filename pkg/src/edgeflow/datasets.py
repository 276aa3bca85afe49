"""Synthetic and file-backed datasets for the experiments.

The default workload is a two-Gaussian binary task: class +-1 drawn from
N(+-mu, I) with mu = (separation/2) * u for a fixed unit direction u. The
MNIST IDX reader handles the big-endian image/label files with an optional
class-pair restriction for binary tasks.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .channel import RngStream
from .errors import FormatError, InvalidInput


@dataclass(frozen=True)
class LabeledSample:
    features: np.ndarray
    label: float
    origin_device: int = -1


def class_direction(dim: int) -> np.ndarray:
    """Canonical unit direction separating the two synthetic classes."""
    return np.ones(dim) / np.sqrt(dim)


def two_gaussians(
    count: int, dim: int, separation: float, rng: RngStream
) -> tuple[np.ndarray, np.ndarray]:
    """Balanced +-1 sample from two unit-covariance Gaussians.

    Means sit at +-(separation/2) * u along the canonical direction, so the
    Bayes-optimal accuracy is Phi(separation/2).
    """
    if count < 1 or dim < 1:
        raise InvalidInput("count and dim must be positive")
    g = rng.generator()
    y = np.where(g.random(count) < 0.5, 1.0, -1.0)
    u = class_direction(dim)
    X = g.standard_normal((count, dim)) + np.outer(y * separation / 2.0, u)
    return X, y


def banded_pool(
    count: int,
    dim: int,
    separation: float,
    band: tuple[float, float],
    rng: RngStream,
) -> tuple[np.ndarray, np.ndarray]:
    """Two-Gaussian sample restricted to |x . u| in [band), by rejection.

    Models a device whose local data sits in a distance band around the true
    class boundary: low bands hold informative samples, high bands easy ones.
    """
    lo, hi = band
    if not 0 <= lo < hi:
        raise InvalidInput(f"invalid band {band}")
    u = class_direction(dim)
    xs, ys = [], []
    attempt = 0
    while sum(x.shape[0] for x in xs) < count:
        draw = max(4 * count, 64)
        X, y = two_gaussians(draw, dim, separation, rng.child(attempt))
        proj = np.abs(X @ u)
        keep = (proj >= lo) & (proj < hi)
        xs.append(X[keep])
        ys.append(y[keep])
        attempt += 1
        if attempt > 200:
            raise InvalidInput(f"band {band} too narrow to fill pool of {count}")
    X = np.vstack(xs)[:count]
    y = np.concatenate(ys)[:count]
    return X, y


def fit_standardizer(X) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate mean and std of a reference set (std floored at 1e-12)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return X.mean(axis=0), np.maximum(X.std(axis=0), 1e-12)


def standardize(X, mean, std) -> np.ndarray:
    return (np.asarray(X, dtype=np.float64) - mean) / std


# ---------------------------------------------------------------------------
# MNIST IDX files (big-endian magic 0x00000803 images / 0x00000801 labels).
# ---------------------------------------------------------------------------

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


def load_idx_images(path) -> np.ndarray:
    """Images as (count, rows*cols) float array scaled to [0, 1]."""
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) < 16:
            raise FormatError(f"{path}: truncated IDX image header")
        magic, count, rows, cols = struct.unpack(">IIII", header)
        if magic != IDX_IMAGES_MAGIC:
            raise FormatError(f"{path}: bad IDX image magic 0x{magic:08x}")
        raw = fh.read(count * rows * cols)
    if len(raw) != count * rows * cols:
        raise FormatError(f"{path}: truncated IDX image payload")
    data = np.frombuffer(raw, dtype=np.uint8).reshape(count, rows * cols)
    return data.astype(np.float64) / 255.0


def load_idx_labels(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) < 8:
            raise FormatError(f"{path}: truncated IDX label header")
        magic, count = struct.unpack(">II", header)
        if magic != IDX_LABELS_MAGIC:
            raise FormatError(f"{path}: bad IDX label magic 0x{magic:08x}")
        raw = fh.read(count)
    if len(raw) != count:
        raise FormatError(f"{path}: truncated IDX label payload")
    return np.frombuffer(raw, dtype=np.uint8).astype(np.int64)


def mnist_binary(
    images_path, labels_path, classes: tuple[int, int]
) -> tuple[np.ndarray, np.ndarray]:
    """Restrict MNIST to a class pair, relabeled to -1/+1."""
    X = load_idx_images(images_path)
    y = load_idx_labels(labels_path)
    if X.shape[0] != y.shape[0]:
        raise FormatError("image/label counts differ")
    neg, pos = classes
    keep = (y == neg) | (y == pos)
    if not np.any(keep):
        raise InvalidInput(f"no samples of classes {classes}")
    return X[keep], np.where(y[keep] == pos, 1.0, -1.0)
