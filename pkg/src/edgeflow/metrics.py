"""Per-round telemetry and its CSV persistence.

The CSV header is stable and consumed verbatim by the plotting component:
round, test_accuracy, cum_bits, bits_per_coeff, aircomp_mse,
selected_device, wall_time_ms. Floats are written with 17 significant
digits so a write/read round trip is value-exact; absent fields are empty.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .errors import FormatError

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


@dataclass(frozen=True)
class RoundMetrics:
    round: int
    test_accuracy: float | None = None
    cum_bits: int | None = None
    bits_per_coeff: float | None = None
    aircomp_mse: float | None = None
    selected_device: int | None = None
    wall_time_ms: float | None = None


@dataclass(frozen=True)
class SweepCell:
    devices: int
    m_r: int
    m_t: int
    streams: int
    snr_db: float
    mode: str
    beamformer: str
    trials: int
    mean_mse: float
    mean_tx_power: float


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_metrics(rows, path) -> None:
    """Write round metrics as CSV with the stable header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER)
        for row in rows:
            writer.writerow(
                [
                    _fmt(row.round),
                    _fmt(row.test_accuracy),
                    _fmt(row.cum_bits),
                    _fmt(row.bits_per_coeff),
                    _fmt(row.aircomp_mse),
                    _fmt(row.selected_device),
                    _fmt(row.wall_time_ms),
                ]
            )


def _parse(text: str, cast):
    return None if text == "" else cast(text)


def read_metrics(path) -> list[RoundMetrics]:
    """Parse a metrics CSV back; raises FormatError on schema mismatch."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty metrics file") from None
        if header != METRICS_HEADER:
            raise FormatError(
                f"{path}: header {header} does not match expected {METRICS_HEADER}"
            )
        rows = []
        for i, cells in enumerate(reader, start=2):
            if len(cells) != len(METRICS_HEADER):
                raise FormatError(f"{path}:{i}: expected {len(METRICS_HEADER)} fields")
            try:
                rows.append(
                    RoundMetrics(
                        round=int(cells[0]),
                        test_accuracy=_parse(cells[1], float),
                        cum_bits=_parse(cells[2], int),
                        bits_per_coeff=_parse(cells[3], float),
                        aircomp_mse=_parse(cells[4], float),
                        selected_device=_parse(cells[5], int),
                        wall_time_ms=_parse(cells[6], float),
                    )
                )
            except ValueError as exc:
                raise FormatError(f"{path}:{i}: {exc}") from exc
    return rows


def write_sweep(cells, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_HEADER)
        for c in cells:
            writer.writerow(
                [
                    _fmt(c.devices),
                    _fmt(c.m_r),
                    _fmt(c.m_t),
                    _fmt(c.streams),
                    _fmt(c.snr_db),
                    c.mode,
                    c.beamformer,
                    _fmt(c.trials),
                    _fmt(c.mean_mse),
                    _fmt(c.mean_tx_power),
                ]
            )


def read_sweep(path) -> list[SweepCell]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty sweep file") from None
        if header != SWEEP_HEADER:
            raise FormatError(
                f"{path}: header {header} does not match expected {SWEEP_HEADER}"
            )
        cells = []
        for i, row in enumerate(reader, start=2):
            if len(row) != len(SWEEP_HEADER):
                raise FormatError(f"{path}:{i}: expected {len(SWEEP_HEADER)} fields")
            try:
                cells.append(
                    SweepCell(
                        devices=int(row[0]),
                        m_r=int(row[1]),
                        m_t=int(row[2]),
                        streams=int(row[3]),
                        snr_db=float(row[4]),
                        mode=row[5],
                        beamformer=row[6],
                        trials=int(row[7]),
                        mean_mse=float(row[8]),
                        mean_tx_power=float(row[9]),
                    )
                )
            except ValueError as exc:
                raise FormatError(f"{path}:{i}: {exc}") from exc
    return cells
