"""Parsing and validation of the simulator's CSV outputs.

The column sets below are the published interface of the simulator's
metrics writer; any deviation is a schema mismatch and parsing fails with
a diagnostic naming the offending columns.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

METRICS_HEADER = [
    "round",
    "test_accuracy",
    "cum_bits",
    "bits_per_coeff",
    "aircomp_mse",
    "selected_device",
    "wall_time_ms",
]

SWEEP_HEADER = [
    "devices",
    "m_r",
    "m_t",
    "streams",
    "snr_db",
    "mode",
    "beamformer",
    "trials",
    "mean_mse",
    "mean_tx_power",
]


class SchemaError(ValueError):
    """Input file does not match the published CSV schema."""


@dataclass
class MetricFrame:
    """Rows of one metrics CSV, sorted by round, with a display label."""

    label: str
    rounds: list = field(default_factory=list)
    test_accuracy: list = field(default_factory=list)


@dataclass
class SweepFrame:
    """Rows of a sweep CSV grouped for plotting."""

    snr_db: list
    mean_mse: list
    mode: list
    streams: list
    beamformer: list


def _check_header(header, expected, path):
    if header == expected:
        return
    missing = [c for c in expected if c not in (header or [])]
    extra = [c for c in (header or []) if c not in expected]
    detail = []
    if missing:
        detail.append(f"missing columns: {', '.join(missing)}")
    if extra:
        detail.append(f"unexpected columns: {', '.join(extra)}")
    if not detail:
        detail.append(f"column order {header} != {expected}")
    raise SchemaError(f"{path}: {'; '.join(detail)}")


def default_label(path) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def load_metrics(path, label=None) -> MetricFrame:
    """Parse an accuracy-vs-round CSV; label falls back to the file stem."""
    frame = MetricFrame(label=label or default_label(path))
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        _check_header(header, METRICS_HEADER, path)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(METRICS_HEADER):
                raise SchemaError(f"{path}:{lineno}: expected {len(METRICS_HEADER)} fields")
            try:
                rnd = int(row[0])
                acc = float(row[1]) if row[1] else None
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from exc
            if acc is None:
                raise SchemaError(f"{path}:{lineno}: empty test_accuracy")
            frame.rounds.append(rnd)
            frame.test_accuracy.append(acc)
    if not frame.rounds:
        raise SchemaError(f"{path}: no data rows")
    order = sorted(range(len(frame.rounds)), key=frame.rounds.__getitem__)
    frame.rounds = [frame.rounds[i] for i in order]
    frame.test_accuracy = [frame.test_accuracy[i] for i in order]
    return frame


def load_sweep(path) -> SweepFrame:
    """Parse an AirComp sweep CSV."""
    snr, mse, mode, streams, beamformer = [], [], [], [], []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        _check_header(header, SWEEP_HEADER, path)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(SWEEP_HEADER):
                raise SchemaError(f"{path}:{lineno}: expected {len(SWEEP_HEADER)} fields")
            try:
                snr.append(float(row[4]))
                mode.append(row[5])
                beamformer.append(row[6])
                streams.append(int(row[3]))
                mse.append(float(row[8]))
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from exc
    if not snr:
        raise SchemaError(f"{path}: no data rows")
    return SweepFrame(
        snr_db=snr, mean_mse=mse, mode=mode, streams=streams, beamformer=beamformer
    )
