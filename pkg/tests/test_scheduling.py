import numpy as np
import pytest

from edgeflow.errors import InvalidInput, ModelDegenerate
from edgeflow.learners import SvmModel
from edgeflow.scheduling import (
    DeviceReport,
    device_report,
    dii,
    distance_uncertainty,
    select_device,
)


def report(device_id, snr, unc):
    return DeviceReport(
        device_id=device_id, snr_linear=snr, max_uncertainty=unc, best_sample_index=0
    )


class TestDii:
    def test_paper_settings_value(self):
        value, _ = dii(31.62, [-0.9, -0.20, -0.5])
        assert value == pytest.approx(-0.2316, abs=1e-4)

    def test_infinite_snr_limit(self):
        value, best = dii(1e30, [-0.4, -0.1])
        assert value == pytest.approx(-0.1, abs=1e-12)
        assert best == 1

    def test_matches_direct_formula(self, gen):
        for _ in range(50):
            snr = float(gen.uniform(0.1, 100))
            unc = gen.standard_normal(int(gen.integers(1, 20)))
            value, best = dii(snr, unc)
            assert value == pytest.approx(-1.0 / snr + unc.max(), abs=1e-12)
            assert best == int(np.argmax(unc))

    def test_lowest_argmax_on_ties(self):
        _, best = dii(10.0, [-0.5, -0.2, -0.2])
        assert best == 1

    def test_errors(self):
        with pytest.raises(InvalidInput):
            dii(10.0, [])
        with pytest.raises(InvalidInput):
            dii(0.0, [-0.1])


class TestSelectDevice:
    def test_tie_breaks_to_lowest_id(self):
        reports = [report(0, 1.0, -0.5), report(1, 1.0, -0.1), report(2, 1.0, -0.1)]
        decision = select_device(reports, "importance")
        assert decision.selected_device == 1
        assert np.allclose(decision.dii_values, [-1.5, -1.1, -1.1])

    @pytest.mark.parametrize("policy", ["importance", "channel_aware", "data_aware"])
    def test_single_device(self, policy):
        decision = select_device([report(4, 2.0, -0.3)], policy)
        assert decision.selected_device == 4
        assert decision.policy == policy

    def test_equal_uncertainty_matches_channel_aware(self, gen):
        for _ in range(25):
            snrs = gen.uniform(0.5, 50, 6)
            reports = [report(k, snrs[k], -0.7) for k in range(6)]
            imp = select_device(reports, "importance").selected_device
            chan = select_device(reports, "channel_aware").selected_device
            assert imp == chan

    def test_equal_snr_matches_data_aware(self, gen):
        for _ in range(25):
            unc = -gen.uniform(0.0, 2.0, 6)
            reports = [report(k, 7.5, unc[k]) for k in range(6)]
            imp = select_device(reports, "importance").selected_device
            data = select_device(reports, "data_aware").selected_device
            assert imp == data

    def test_importance_invariant_to_common_uncertainty_shift(self, gen):
        snrs = gen.uniform(0.5, 50, 5)
        unc = -gen.uniform(0.0, 2.0, 5)
        base = select_device(
            [report(k, snrs[k], unc[k]) for k in range(5)], "importance"
        )
        shifted = select_device(
            [report(k, snrs[k], unc[k] + 3.7) for k in range(5)], "importance"
        )
        assert base.selected_device == shifted.selected_device

    def test_monotone_in_snr_and_uncertainty(self):
        base = [report(0, 10.0, -0.5), report(1, 10.0, -0.5)]
        better_snr = [report(0, 10.0, -0.5), report(1, 40.0, -0.5)]
        better_unc = [report(0, 10.0, -0.5), report(1, 10.0, -0.1)]
        assert select_device(base, "importance").selected_device == 0
        assert select_device(better_snr, "importance").selected_device == 1
        assert select_device(better_unc, "importance").selected_device == 1

    def test_deterministic(self, gen):
        reports = [report(k, float(gen.uniform(1, 9)), float(-gen.random())) for k in range(8)]
        d1 = select_device(reports, "importance")
        d2 = select_device(reports, "importance")
        assert d1.selected_device == d2.selected_device

    def test_errors(self):
        with pytest.raises(InvalidInput):
            select_device([], "importance")
        with pytest.raises(InvalidInput):
            select_device([report(0, 1.0, -0.1)], "weird")


class TestDistanceUncertainty:
    def test_boundary_sample_is_maximum(self):
        model = SvmModel(w=np.array([1.0, 1.0]), b=-2.0, C=1.0)
        on_boundary = np.array([1.0, 1.0])
        assert distance_uncertainty(model, on_boundary) == pytest.approx(0.0, abs=1e-12)

    def test_direct_formula(self):
        model = SvmModel(w=np.array([1.0, 0.0]), b=0.0, C=1.0)
        assert distance_uncertainty(model, np.array([2.0, 5.0])) == pytest.approx(-2.0)

    def test_scale_invariance(self, gen):
        w = gen.standard_normal(4)
        b = float(gen.standard_normal())
        x = gen.standard_normal(4)
        base = distance_uncertainty(SvmModel(w=w, b=b, C=1.0), x)
        for _ in range(10):
            c = float(gen.uniform(0.1, 50))
            scaled = distance_uncertainty(SvmModel(w=c * w, b=c * b, C=1.0), x)
            assert scaled == pytest.approx(base, abs=1e-10)

    def test_degenerate_model(self):
        with pytest.raises(ModelDegenerate):
            distance_uncertainty(SvmModel(w=np.zeros(3), b=0.0, C=1.0), np.ones(3))


class TestDeviceReport:
    def test_report_carries_best_sample(self):
        model = SvmModel(w=np.array([1.0, 0.0]), b=0.0, C=1.0)
        pool = np.array([[2.0, 0.0], [0.1, 0.0], [-3.0, 0.0]])
        rep = device_report(model, pool, snr_linear=10.0, device_id=3)
        assert rep.best_sample_index == 1
        assert rep.max_uncertainty == pytest.approx(-0.1)
        assert rep.dii == pytest.approx(-0.1 - 0.1)

    def test_snr_must_be_positive(self):
        with pytest.raises(InvalidInput):
            report(0, 0.0, -0.1)
