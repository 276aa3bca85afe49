"""MIMO over-the-air computation.

Each device inverts its channel with a truncated zero-forcing precoder so the
effective channel becomes an orthonormal basis U_k of an N-dimensional
subspace; the access point applies a tall unitary aggregation beamformer A and
receives y = sum_k A^H U_k x_k + A^H n. Choosing A as the Grassmann centroid
of the U_k minimizes the total projection-distance misalignment.

Two transmission modes are provided:

* ``raw``     - the superposition above as-is; misalignment A^H U_k != I
                shows up as aggregation error.
* ``aligned`` - each device pre-rotates its payload by (A^H U_k)^-1 so the
                noise-free received vector is exactly sum_k x_k; beamformer
                quality then shows up as per-device transmit power instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .channel import MimoChannel, RngStream, complex_gaussian
from .errors import AlignmentSingular, IllConditionedChannel, InvalidInput
from .manifold import Subspace, grassmann_centroid, svd

SIGMA_MIN_THRESHOLD = 1e-6
ALIGNMENT_COND_MAX = 1e6


@dataclass(frozen=True)
class Precoder:
    """Zero-forcing transmit precoder W (transmit antennas x streams)."""

    W: np.ndarray
    device_id: int = 0


@dataclass(frozen=True)
class AggregationBeamformer:
    """Tall unitary receive beamformer A (receive antennas x streams)."""

    A: np.ndarray
    non_unique_warning: bool = False

    @property
    def n_streams(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class AirCompResult:
    y: np.ndarray
    target: np.ndarray
    mse: float
    per_device_tx_power: np.ndarray
    excluded_devices: tuple = ()


def zf_precoder(
    channel: MimoChannel, n_streams: int, sigma_min_threshold: float = SIGMA_MIN_THRESHOLD
) -> tuple[Precoder, Subspace]:
    """Truncated zero-forcing precoder and the effective channel subspace.

    W = V[:, :N] diag(1/sigma_1..N) makes H @ W equal to the first N left
    singular vectors of H exactly, so the device's effective channel is an
    orthonormal basis. Raises IllConditionedChannel when the N-th singular
    value is below the threshold (1/sigma would blow up transmit power).
    """
    h = channel.H
    if n_streams < 1 or n_streams > min(h.shape):
        raise InvalidInput(
            f"n_streams={n_streams} must be in [1, min(M_r, M_t)={min(h.shape)}]"
        )
    triple = svd(h)
    sigma_n = float(triple.singular_values[n_streams - 1])
    if sigma_n < sigma_min_threshold:
        raise IllConditionedChannel(channel.device_id, sigma_n, sigma_min_threshold)
    w = triple.V[:, :n_streams] / triple.singular_values[:n_streams]
    return (
        Precoder(W=w, device_id=channel.device_id),
        Subspace(triple.U[:, :n_streams]),
    )


def design_beamformer(
    channels: Sequence[MimoChannel], n_streams: int
) -> AggregationBeamformer:
    """Aggregation beamformer from the Grassmann centroid of channel subspaces."""
    if len(channels) == 0:
        raise InvalidInput("need at least one channel")
    bases = [zf_precoder(ch, n_streams)[1] for ch in channels]
    centroid = grassmann_centroid(bases, n_streams)
    return AggregationBeamformer(
        A=centroid.subspace.basis, non_unique_warning=centroid.non_unique
    )


def random_beamformer(m_r: int, n_streams: int, rng: RngStream) -> AggregationBeamformer:
    """Haar-random tall unitary beamformer (baseline for the centroid)."""
    g = rng.generator()
    q, r = np.linalg.qr(complex_gaussian(g, (m_r, n_streams)))
    d = np.diag(r)
    phases = np.where(np.abs(d) == 0, 1.0, d.conj() / np.abs(d))
    return AggregationBeamformer(A=q * phases)


def transmit_round(
    beamformer: AggregationBeamformer,
    devices: Sequence[tuple[MimoChannel, Precoder, np.ndarray]],
    noise_variance: float,
    mode: Literal["raw", "aligned"] = "aligned",
    rng: RngStream | None = None,
) -> AirCompResult:
    """Simulate one simultaneous uplink use of the multi-access channel.

    ``devices`` is a sequence of (channel, precoder, payload) triples with
    payloads of length N. The channel-level target is the plain sum of the
    participating payloads; averaging is a server-side post-step.

    In aligned mode a device whose alignment matrix A^H U_k has condition
    number above 1e6 is excluded from the round (it cannot invert the
    misalignment at sane power) and reported in ``excluded_devices``;
    if that excludes every device, the round is meaningless and
    AlignmentSingular is raised instead.
    """
    if mode not in ("raw", "aligned"):
        raise InvalidInput(f"unknown mode {mode!r}")
    if noise_variance < 0:
        raise InvalidInput("noise variance must be >= 0")
    a = beamformer.A
    m_r, n = a.shape
    y = np.zeros(n, dtype=np.complex128)
    target = np.zeros(n, dtype=np.complex128)
    powers = np.zeros(len(devices))
    excluded = []
    for i, (channel, precoder, payload) in enumerate(devices):
        x = np.asarray(payload, dtype=np.complex128)
        if x.shape != (n,):
            raise InvalidInput(
                f"payload of device {channel.device_id} has shape {x.shape}, expected ({n},)"
            )
        if not np.all(np.isfinite(x)):
            raise InvalidInput(f"payload of device {channel.device_id} is not finite")
        effective_u = channel.H @ precoder.W
        if mode == "aligned":
            align = a.conj().T @ effective_u
            if np.linalg.cond(align) > ALIGNMENT_COND_MAX:
                excluded.append(channel.device_id)
                continue
            sent = precoder.W @ np.linalg.solve(align, x)
        else:
            sent = precoder.W @ x
        powers[i] = float(np.sum(np.abs(sent) ** 2))
        y += a.conj().T @ (channel.H @ sent)
        target += x
    if len(devices) > 0 and len(excluded) == len(devices):
        raise AlignmentSingular(
            f"no device could align with the beamformer (excluded: {excluded})"
        )
    if noise_variance > 0:
        if rng is None:
            raise InvalidInput("rng required when noise variance > 0")
        noise = complex_gaussian(rng.generator(), m_r, noise_variance)
        y += a.conj().T @ noise
    mse = float(np.sum(np.abs(y - target) ** 2) / n)
    return AirCompResult(
        y=y,
        target=target,
        mse=mse,
        per_device_tx_power=powers,
        excluded_devices=tuple(excluded),
    )


def aircomp_average(result: AirCompResult, n_devices: int) -> np.ndarray:
    """Server-side post-step: divide the received sum by the device count."""
    if n_devices < 1:
        raise InvalidInput("device count must be >= 1")
    return result.y / n_devices


def reals_to_complex(values: np.ndarray) -> np.ndarray:
    """Pack a real vector into a complex payload, pairing consecutive
    coefficients as (real, imag); a trailing odd coefficient is zero-padded."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size % 2:
        v = np.concatenate([v, [0.0]])
    return v[0::2] + 1j * v[1::2]


def complex_to_reals(payload: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of reals_to_complex, truncated to the original length."""
    c = np.asarray(payload, dtype=np.complex128).ravel()
    out = np.empty(2 * c.size)
    out[0::2] = c.real
    out[1::2] = c.imag
    return out[:dim]
