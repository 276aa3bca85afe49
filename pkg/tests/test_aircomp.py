import numpy as np
import pytest

from conftest import random_stiefel_batch, stiefel_objective
from edgeflow.aircomp import (
    aircomp_average,
    complex_to_reals,
    design_beamformer,
    reals_to_complex,
    transmit_round,
    zf_precoder,
)
from edgeflow.channel import MimoChannel, RngStream, sample_rayleigh_mimo
from edgeflow.errors import IllConditionedChannel, InvalidInput
from edgeflow.manifold import hermitian_eig, proj_dist_fro


def make_devices(channels, n, payloads):
    out = []
    for ch, x in zip(channels, payloads):
        prec, _ = zf_precoder(ch, n)
        out.append((ch, prec, np.asarray(x, dtype=complex)))
    return out


class TestZfPrecoder:
    def test_identity_channel(self):
        prec, u = zf_precoder(MimoChannel(np.eye(2, dtype=complex)), 2)
        assert np.allclose(prec.W, np.eye(2))
        assert np.allclose(np.abs(u.basis), np.eye(2))

    def test_diagonal_inversion(self):
        prec, _ = zf_precoder(MimoChannel(np.diag([2.0, 1.0]).astype(complex)), 2)
        h = np.diag([2.0, 1.0])
        assert np.allclose(h @ prec.W, np.eye(2), atol=1e-12)

    def test_random_channel_effective_basis(self, gen):
        h = gen.standard_normal((4, 3)) + 1j * gen.standard_normal((4, 3))
        ch = MimoChannel(h)
        prec, u = zf_precoder(ch, 2)
        assert np.linalg.norm(h @ prec.W - u.basis) < 1e-8

    def test_ill_conditioned_flagged(self):
        h = np.diag([1.0, 1e-9]).astype(complex)
        with pytest.raises(IllConditionedChannel) as err:
            zf_precoder(MimoChannel(h, device_id=7), 2)
        assert err.value.device_id == 7


class TestDesignBeamformer:
    def test_single_device_spans_channel_subspace(self, gen):
        ch = sample_rayleigh_mimo(4, 3, RngStream(1))
        _, u = zf_precoder(ch, 2)
        bf = design_beamformer([ch], 2)
        assert proj_dist_fro(u, type(u)(bf.A)) < 1e-8

    def test_identical_channels_match_single(self):
        # duplication scales G by K, leaving the centroid subspace unchanged
        from edgeflow.manifold import Subspace

        ch = sample_rayleigh_mimo(4, 3, RngStream(2))
        a1 = design_beamformer([ch], 2).A
        a3 = design_beamformer([ch, ch, ch], 2).A
        assert proj_dist_fro(Subspace(a1), Subspace(a3)) < 1e-8

    def test_not_worse_than_random_search(self, gen):
        channels = [sample_rayleigh_mimo(4, 3, RngStream(3, (k,)), k) for k in range(3)]
        bases = [zf_precoder(ch, 2)[1] for ch in channels]
        bf = design_beamformer(channels, 2)
        achieved = sum(proj_dist_fro(u, type(u)(bf.A)) ** 2 for u in bases)
        best = stiefel_objective(random_stiefel_batch(4, 2, 10_000, gen), bases).min()
        assert achieved <= best + 1e-6

    def test_objective_identity_with_eigenvalues(self):
        channels = [sample_rayleigh_mimo(5, 3, RngStream(4, (k,)), k) for k in range(4)]
        bases = [zf_precoder(ch, 2)[1] for ch in channels]
        bf = design_beamformer(channels, 2)
        g = np.zeros((5, 5), dtype=complex)
        for u in bases:
            g += u.projector()
        w, _ = hermitian_eig(g)
        achieved = sum(proj_dist_fro(u, type(u)(bf.A)) ** 2 for u in bases)
        assert achieved == pytest.approx(2 * (2 * 4 - w[:2].sum()), abs=1e-8)

    def test_empty_rejected(self):
        with pytest.raises(InvalidInput):
            design_beamformer([], 2)


class TestTransmitRound:
    def test_single_identity_channel_lossless(self):
        ch = MimoChannel(np.eye(2, dtype=complex))
        bf = design_beamformer([ch], 2)
        x = np.array([1 + 1j, -2.0])
        res = transmit_round(bf, make_devices([ch], 2, [x]), 0.0, "aligned")
        assert np.allclose(res.y, x, atol=1e-12)
        assert res.mse < 1e-18

    def test_aligned_sum_exact(self):
        channels = [sample_rayleigh_mimo(4, 3, RngStream(5, (k,)), k) for k in range(3)]
        bf = design_beamformer(channels, 2)
        payloads = [np.array([k + 1.0, 1j * k]) for k in range(3)]
        res = transmit_round(bf, make_devices(channels, 2, payloads), 0.0, "aligned")
        assert np.linalg.norm(res.y - sum(payloads)) < 1e-9

    def test_raw_matches_direct_evaluation(self):
        channels = [sample_rayleigh_mimo(4, 3, RngStream(6, (k,)), k) for k in range(2)]
        bf = design_beamformer(channels, 2)
        payloads = [np.array([1.0, 2.0]), np.array([0.5j, -1.0])]
        devices = make_devices(channels, 2, payloads)
        res = transmit_round(bf, devices, 0.0, "raw")
        expected = np.zeros(2, dtype=complex)
        for (ch, prec, x) in devices:
            expected += bf.A.conj().T @ (ch.H @ prec.W) @ x
        assert np.allclose(res.y, expected, atol=1e-12)

    def test_mse_field_consistent(self):
        channels = [sample_rayleigh_mimo(4, 3, RngStream(7, (k,)), k) for k in range(2)]
        bf = design_beamformer(channels, 2)
        payloads = [np.ones(2), 1j * np.ones(2)]
        res = transmit_round(
            bf, make_devices(channels, 2, payloads), 0.3, "raw", RngStream(8)
        )
        recomputed = np.sum(np.abs(res.y - res.target) ** 2) / 2
        assert res.mse == pytest.approx(recomputed, abs=1e-12)

    def test_aligned_noise_law(self):
        # E[mse] = sigma^2 since A^H A = I preserves per-stream noise power
        channels = [sample_rayleigh_mimo(4, 3, RngStream(9, (k,)), k) for k in range(3)]
        bf = design_beamformer(channels, 2)
        payloads = [np.ones(2, dtype=complex) for _ in range(3)]
        devices = make_devices(channels, 2, payloads)
        sigma2 = 0.5
        mses = [
            transmit_round(bf, devices, sigma2, "aligned", RngStream(10, (t,))).mse
            for t in range(4000)
        ]
        assert np.mean(mses) == pytest.approx(sigma2, rel=0.05)

    def test_raw_mse_monotone_in_noise_with_crn(self):
        channels = [sample_rayleigh_mimo(4, 3, RngStream(11, (k,)), k) for k in range(2)]
        bf = design_beamformer(channels, 2)
        devices = make_devices(channels, 2, [np.ones(2), np.ones(2)])
        lo, hi = [], []
        for t in range(500):
            rng = RngStream(12, (t,))  # common random numbers across both levels
            lo.append(transmit_round(bf, devices, 0.1, "raw", rng).mse)
            hi.append(transmit_round(bf, devices, 1.0, "raw", rng).mse)
        assert np.mean(hi) >= np.mean(lo)

    def test_tx_power_grows_as_channel_shrinks(self):
        h = sample_rayleigh_mimo(4, 3, RngStream(13)).H
        powers = []
        for scale in (1.0, 0.5, 0.25):
            ch = MimoChannel(scale * h)
            bf = design_beamformer([ch], 2)
            res = transmit_round(
                bf, make_devices([ch], 2, [np.ones(2)]), 0.0, "aligned"
            )
            powers.append(res.per_device_tx_power[0])
        assert powers[0] < powers[1] < powers[2]

    def test_alignment_singular_device_excluded(self):
        # Beamformer orthogonal to the first device's effective subspace
        from edgeflow.aircomp import AggregationBeamformer

        bad = MimoChannel(np.diag([1.0, 1.0, 0, 0]).astype(complex)[:, :3], device_id=0)
        good_h = np.zeros((4, 3), dtype=complex)
        good_h[2, 0] = 1.0
        good_h[3, 1] = 1.0
        good = MimoChannel(good_h, device_id=1)
        a = np.zeros((4, 2), dtype=complex)
        a[2, 0] = 1.0
        a[3, 1] = 1.0
        bf = AggregationBeamformer(A=a)
        devices = make_devices([bad, good], 2, [np.ones(2), np.ones(2)])
        res = transmit_round(bf, devices, 0.0, "aligned")
        assert res.excluded_devices == (0,)
        assert res.per_device_tx_power[0] == 0.0
        assert np.allclose(res.y, np.ones(2), atol=1e-10)  # only device 1 lands

    def test_all_devices_singular_raises(self):
        from edgeflow.aircomp import AggregationBeamformer
        from edgeflow.errors import AlignmentSingular

        ch = MimoChannel(np.diag([1.0, 1.0, 0, 0]).astype(complex)[:, :3])
        a = np.zeros((4, 2), dtype=complex)
        a[2, 0] = 1.0
        a[3, 1] = 1.0
        bf = AggregationBeamformer(A=a)
        with pytest.raises(AlignmentSingular):
            transmit_round(bf, make_devices([ch], 2, [np.ones(2)]), 0.0, "aligned")

    def test_aircomp_average(self):
        from edgeflow.aircomp import AirCompResult

        res = AirCompResult(
            y=np.array([2.0, 4.0]),
            target=np.array([2.0, 4.0]),
            mse=0.0,
            per_device_tx_power=np.zeros(2),
        )
        assert np.allclose(aircomp_average(res, 2), [1.0, 2.0])
        assert np.allclose(aircomp_average(res, 1), res.y)

    def test_aligned_average_equals_payload_mean(self):
        channels = [sample_rayleigh_mimo(4, 3, RngStream(14, (k,)), k) for k in range(4)]
        bf = design_beamformer(channels, 2)
        payloads = [np.array([k * 1.0, -k * 1j]) for k in range(4)]
        res = transmit_round(bf, make_devices(channels, 2, payloads), 0.0, "aligned")
        assert np.linalg.norm(aircomp_average(res, 4) - np.mean(payloads, axis=0)) < 1e-9


class TestPayloadEmbedding:
    def test_round_trip_even_and_odd(self, gen):
        for dim in (6, 7):
            v = gen.standard_normal(dim)
            assert np.array_equal(complex_to_reals(reals_to_complex(v), dim), v)

    def test_linear(self, gen):
        a, b = gen.standard_normal((2, 8))
        assert np.allclose(
            reals_to_complex(a + 2 * b), reals_to_complex(a) + 2 * reals_to_complex(b)
        )
