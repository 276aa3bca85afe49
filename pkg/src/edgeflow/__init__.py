"""edgeflow: a deterministic simulator for communication-efficient edge
learning - MIMO over-the-air aggregation, hierarchical gradient
quantization, and data-importance-aware device scheduling."""

from . import (
    aircomp,
    channel,
    codebooks,
    config,
    datasets,
    errors,
    gradquant,
    harness,
    learners,
    manifold,
    metrics,
    scheduling,
)

__version__ = "0.1.0"

__all__ = [
    "aircomp",
    "channel",
    "codebooks",
    "config",
    "datasets",
    "errors",
    "gradquant",
    "harness",
    "learners",
    "manifold",
    "metrics",
    "scheduling",
    "__version__",
]
