"""Figure rendering. All validation happens before anything touches the
output path; images are written atomically via a temp file so a partial
figure can never appear, and PNG metadata is suppressed so identical
inputs give identical bytes."""

from __future__ import annotations

import os
import tempfile

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .frames import load_metrics, load_sweep

MSE_FLOOR = 1e-20


def _atomic_save(fig, out_path):
    directory = os.path.dirname(os.path.abspath(out_path)) or "."
    suffix = os.path.splitext(out_path)[1] or ".png"
    fd, tmp = tempfile.mkstemp(suffix=suffix, dir=directory)
    os.close(fd)
    try:
        metadata = {"Software": None} if suffix == ".png" else None
        fig.savefig(tmp, metadata=metadata)
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    finally:
        plt.close(fig)


def smooth(values, window: int):
    """Trailing-window mean; the first window-1 points average what exists."""
    out = []
    for i in range(len(values)):
        lo = max(0, i - window + 1)
        out.append(sum(values[lo : i + 1]) / (i + 1 - lo))
    return out


def plot_accuracy(inputs, out_path, window: int = 0) -> None:
    """Accuracy-vs-round overlay, one labeled curve per input CSV.

    ``inputs`` is a list of (path, label-or-None); parsing failures raise
    before the output file is created.
    """
    frames = [load_metrics(path, label) for path, label in inputs]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for frame in frames:
        ys = smooth(frame.test_accuracy, window) if window > 1 else frame.test_accuracy
        ax.plot(frame.rounds, ys, label=frame.label)
    ax.set_xlabel("communication round")
    ax.set_ylabel("test accuracy")
    ax.grid(True, alpha=0.3)
    ax.legend()
    if window > 1:
        ax.set_title(f"trailing mean, window={window}", fontsize=9)
    fig.tight_layout()
    _atomic_save(fig, out_path)


def plot_mse_sweep(in_path, out_path) -> None:
    """AirComp MSE vs SNR, grouped by (mode, streams[, beamformer]), log y.

    Zero/near-zero MSE cells are clamped to a floor so exact aligned-mode
    results stay visible on the log axis.
    """
    frame = load_sweep(in_path)
    groups = {}
    multiple_beamformers = len(set(frame.beamformer)) > 1
    for i in range(len(frame.snr_db)):
        key = (frame.mode[i], frame.streams[i], frame.beamformer[i])
        groups.setdefault(key, []).append(
            (frame.snr_db[i], max(frame.mean_mse[i], MSE_FLOOR))
        )
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (mode, streams, beamformer), points in sorted(groups.items()):
        points.sort()
        label = f"{mode}, N={streams}"
        if multiple_beamformers:
            label += f", {beamformer}"
        ax.semilogy([p[0] for p in points], [p[1] for p in points], marker="o", label=label)
    ax.set_xlabel("average transmit SNR (dB)")
    ax.set_ylabel("mean AirComp MSE")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    _atomic_save(fig, out_path)
