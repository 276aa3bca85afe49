"""Data-importance-aware device scheduling for centralized edge learning.

Each device reports a data importance indicator combining its channel
quality and the usefulness of its best local sample,

    I_k = -1/SNR_k + max_n U(x_{k,n}),

where the uncertainty measure U(x) = -distance(x, decision boundary) is
largest (zero) on the boundary. The server schedules the argmax device;
channel-only and data-only selections serve as baselines.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInput
from .learners import SvmModel, boundary_distance

POLICIES = ("importance", "channel_aware", "data_aware")


@dataclass(frozen=True)
class DeviceReport:
    device_id: int
    snr_linear: float
    max_uncertainty: float
    best_sample_index: int

    def __post_init__(self):
        if not self.snr_linear > 0:
            raise InvalidInput("snr_linear must be positive")

    @property
    def dii(self) -> float:
        return -1.0 / self.snr_linear + self.max_uncertainty


@dataclass(frozen=True)
class SchedulingDecision:
    selected_device: int
    dii_values: np.ndarray
    policy: str


def distance_uncertainty(model: SvmModel, x) -> float:
    """U(x) = -distance to the decision boundary; peaks at 0 on the boundary.

    Invariant under positive rescaling of (w, b).
    """
    return -boundary_distance(model, x)


def dii(snr_linear: float, uncertainties) -> tuple[float, int]:
    """DII value and the index of the most uncertain sample (lowest argmax)."""
    uncertainties = np.asarray(uncertainties, dtype=np.float64)
    if uncertainties.size == 0:
        raise InvalidInput("uncertainty set is empty")
    if not snr_linear > 0:
        raise InvalidInput("snr_linear must be positive")
    best = int(np.argmax(uncertainties))
    return -1.0 / snr_linear + float(uncertainties[best]), best


def device_report(
    model: SvmModel, pool: np.ndarray, snr_linear: float, device_id: int
) -> DeviceReport:
    """Evaluate a device's pool against the broadcast model."""
    pool = np.atleast_2d(np.asarray(pool, dtype=np.float64))
    if pool.shape[0] == 0:
        raise InvalidInput(f"device {device_id} has an empty pool")
    uncertainties = [distance_uncertainty(model, x) for x in pool]
    value, best = dii(snr_linear, uncertainties)
    return DeviceReport(
        device_id=device_id,
        snr_linear=snr_linear,
        max_uncertainty=float(uncertainties[best]),
        best_sample_index=best,
    )


def select_device(reports: Sequence[DeviceReport], policy: str) -> SchedulingDecision:
    """Pick the transmitting device under the given policy.

    importance maximizes the DII, channel_aware the SNR, data_aware the
    maximal uncertainty; all ties break to the lowest device id.
    """
    if policy not in POLICIES:
        raise InvalidInput(f"unknown policy {policy!r}")
    if len(reports) == 0:
        raise InvalidInput("no device reports")
    if policy == "importance":
        metric = [r.dii for r in reports]
    elif policy == "channel_aware":
        metric = [r.snr_linear for r in reports]
    else:
        metric = [r.max_uncertainty for r in reports]
    order = sorted(range(len(reports)), key=lambda i: (-metric[i], reports[i].device_id))
    winner = reports[order[0]]
    return SchedulingDecision(
        selected_device=winner.device_id,
        dii_values=np.array([r.dii for r in reports]),
        policy=policy,
    )
