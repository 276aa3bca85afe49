"""Wireless channel and noise models: Rayleigh MIMO draws, scalar fading
links, and complex AWGN, all driven by splittable deterministic RNG streams.

Every operation takes an explicit RngStream; identical (seed, stream_id)
always reproduces the same draws, and distinct stream ids are statistically
independent, so per-(device, round) streams can be consumed in any order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput


@dataclass(frozen=True)
class RngStream:
    """Counter-style random stream keyed by (seed, stream_id).

    ``stream_id`` is a tuple of integers; ``child`` extends it, so a run can
    fan out hierarchical streams like (module, device, round) without any
    draw-order coupling between stages.
    """

    seed: int
    stream_id: tuple = ()

    def __post_init__(self):
        sid = self.stream_id
        if isinstance(sid, int):
            sid = (sid,)
        object.__setattr__(self, "stream_id", tuple(int(k) for k in sid))

    def child(self, *subkeys: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id + tuple(subkeys))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=self.stream_id)
        return np.random.default_rng(seq)


@dataclass(frozen=True)
class MimoChannel:
    """MIMO channel matrix H (receive antennas x transmit antennas)."""

    H: np.ndarray
    device_id: int = 0

    @property
    def m_r(self) -> int:
        return self.H.shape[0]

    @property
    def m_t(self) -> int:
        return self.H.shape[1]


@dataclass(frozen=True)
class ScalarLink:
    """Instantaneous linear SNR of a single-antenna device."""

    snr_linear: float
    device_id: int = 0

    def __post_init__(self):
        if not (self.snr_linear > 0):
            raise InvalidInput(f"snr_linear must be > 0, got {self.snr_linear}")


def complex_gaussian(generator: np.random.Generator, shape, variance=1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian, per-entry variance ``variance``."""
    scale = np.sqrt(variance / 2.0)
    return scale * (
        generator.standard_normal(shape) + 1j * generator.standard_normal(shape)
    )


def sample_rayleigh_mimo(m_r: int, m_t: int, rng: RngStream, device_id: int = 0) -> MimoChannel:
    """Draw an i.i.d. unit-variance Rayleigh-fading MIMO matrix."""
    if m_r < 1 or m_t < 1:
        raise InvalidInput(f"antenna counts must be >= 1, got ({m_r}, {m_t})")
    h = complex_gaussian(rng.generator(), (m_r, m_t))
    return MimoChannel(H=h, device_id=device_id)


def sample_scalar_link(
    mean_snr_db: float, rng: RngStream, device_id: int = 0, fading: bool = True
) -> ScalarLink:
    """Instantaneous SNR of a Rayleigh link with the given average SNR.

    snr = 10^(dB/10) * |h|^2 with h ~ CN(0, 1); with ``fading=False`` the
    fading factor is pinned to 1 so the link is exactly the mean SNR.
    """
    mean_linear = 10.0 ** (mean_snr_db / 10.0)
    if not fading:
        return ScalarLink(snr_linear=mean_linear, device_id=device_id)
    g = rng.generator()
    gain = 0.0
    while gain == 0.0:  # |h|^2 = 0 has probability zero
        h = complex_gaussian(g, ())
        gain = float(np.abs(h) ** 2)
    return ScalarLink(snr_linear=mean_linear * gain, device_id=device_id)


def awgn(signal, noise_variance: float, rng: RngStream) -> np.ndarray:
    """Add circularly-symmetric complex noise of the given per-entry variance."""
    signal = np.asarray(signal, dtype=np.complex128)
    if noise_variance < 0:
        raise InvalidInput(f"noise variance must be >= 0, got {noise_variance}")
    if noise_variance == 0:
        return signal.copy()
    return signal + complex_gaussian(rng.generator(), signal.shape, noise_variance)
