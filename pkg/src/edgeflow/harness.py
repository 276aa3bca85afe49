"""Experiment orchestration: wires channels, AirComp, quantization,
scheduling, and learners into the three experiment families.

Randomness fans out as (master seed, stage tag, device, round) -> stream,
so adding or removing one stage never perturbs another's draws and any run
is reproducible bit-for-bit from (config, seed).
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from . import aircomp, gradquant, scheduling
from .channel import RngStream, sample_rayleigh_mimo, sample_scalar_link
from .codebooks import CodebookBundle, load_bundle, save_bundle
from .config import ExperimentConfig
from .datasets import (
    LabeledSample,
    banded_pool,
    fit_standardizer,
    mnist_binary,
    standardize,
    two_gaussians,
)
from .errors import ConfigError
from .learners import (
    Architecture,
    FedModel,
    evaluate,
    fed_apply,
    fed_local_gradient,
    init_fed_model,
    noisy_receive,
    svm_init,
    svm_update,
)
from .metrics import RoundMetrics, SweepCell

log = logging.getLogger("edgeflow")

# Stream fan-out tags; stable across releases so runs stay reproducible.
TAG_DATA = 1
TAG_INIT = 2
TAG_CHANNEL = 3
TAG_NOISE = 4
TAG_PILOT = 5
TAG_SCHED = 6
TAG_LINK = 7
TAG_SWEEP = 8

UNQUANTIZED_BITS_PER_COEFF = 64  # float64 payload, counted per coefficient


@dataclass(frozen=True)
class RunResult:
    rows: list
    early_stopped: bool = False
    final_model: object = None
    param_trace: tuple = ()  # federated runs: parameter vector after each round


@dataclass(frozen=True)
class FederatedSetup:
    shards: list  # per-device (X, y)
    test_X: np.ndarray
    test_y: np.ndarray
    model: FedModel


def _architecture(config: ExperimentConfig, feature_dim: int) -> Architecture:
    lc = config.learner
    return Architecture(
        kind=lc.arch, in_dim=feature_dim, hidden=lc.hidden, classes=lc.classes
    )


def build_federated_setup(config: ExperimentConfig) -> FederatedSetup:
    """Deterministic data shards, test set, and initial model for a config."""
    rng = RngStream(config.seed)
    ds = config.dataset
    if ds.kind == "mnist":
        X, y = mnist_binary(ds.images, ds.labels, tuple(ds.classes))
        mean, std = fit_standardizer(X)
        X = standardize(X, mean, std)
        test_X, test_y = X[: ds.test_size], y[: ds.test_size]
        pool_X, pool_y = X[ds.test_size :], y[ds.test_size :]
        per = ds.train_per_device
        if pool_X.shape[0] < config.devices * per:
            raise ConfigError("not enough MNIST samples for the requested shards")
        shards = [
            (pool_X[k * per : (k + 1) * per], pool_y[k * per : (k + 1) * per])
            for k in range(config.devices)
        ]
        feature_dim = X.shape[1]
    else:
        feature_dim = config.learner.feature_dim
        shards = []
        for k in range(config.devices):
            shards.append(
                two_gaussians(
                    ds.train_per_device, feature_dim, ds.separation, rng.child(TAG_DATA, k)
                )
            )
        test_X, test_y = two_gaussians(
            ds.test_size, feature_dim, ds.separation, rng.child(TAG_DATA, config.devices)
        )
    model = init_fed_model(
        _architecture(config, feature_dim), rng.child(TAG_INIT), config.learner.init_scale
    )
    return FederatedSetup(shards=shards, test_X=test_X, test_y=test_y, model=model)


def _pilot_gradients(setup: FederatedSetup, config: ExperimentConfig) -> list:
    """Short unquantized training run used only to calibrate codebooks."""
    samples = config.quantization.pilot_samples
    rounds = max(1, math.ceil(samples / len(setup.shards)))
    model = setup.model
    grads = []
    for _ in range(rounds):
        per_device = [fed_local_gradient(model, X, y) for X, y in setup.shards]
        grads.extend(per_device)
        model = fed_apply(model, np.mean(per_device, axis=0), config.learner.lr)
    return grads[:samples]


def build_codebook_bundle(config: ExperimentConfig, setup: FederatedSetup | None = None) -> CodebookBundle:
    """Load the configured bundle, or pilot-calibrate and build one."""
    qc = config.quantization
    if qc.codebook is not None:
        return load_bundle(qc.codebook)
    if setup is None:
        setup = build_federated_setup(config)
    dim = setup.model.parameters.size
    pilots = _pilot_gradients(setup, config)
    return gradquant.build_bundle(
        dim=dim,
        blocks=qc.blocks,
        norm_bits=qc.norm_bits,
        block_bits=qc.block_bits,
        hinge_bits=qc.hinge_bits,
        rng=RngStream(config.seed, (TAG_PILOT,)),
        pilot_gradients=pilots,
    )


def run_federated_quantized(config: ExperimentConfig) -> RunResult:
    """Fig. 3(a)-style loop with digital gradient upload.

    Every device transmits each round; the server averages the dequantized
    gradients (sign vectors for the sign policy) and takes one SGD step.
    """
    setup = build_federated_setup(config)
    policy = config.quantization.policy
    bundle = build_codebook_bundle(config, setup) if policy == "hierarchical" else None
    model = setup.model
    dim = model.parameters.size
    rows = []
    trace = []
    cum_bits = 0
    for r in range(config.rounds):
        t0 = time.perf_counter()
        decoded = []
        round_bits = 0
        bpc = None
        for X, y in setup.shards:
            grad = fed_local_gradient(model, X, y)
            if policy == "hierarchical":
                code = gradquant.quantize(grad, bundle)
                decoded.append(gradquant.dequantize(code, bundle))
                round_bits += code.payload_bits
                bpc = gradquant.bits_per_coefficient(code)
            elif policy == "signsgd":
                code = gradquant.signsgd_quantize(grad)
                decoded.append(gradquant.signsgd_dequantize(code))
                round_bits += code.payload_bits
                bpc = gradquant.bits_per_coefficient(code)
            else:
                decoded.append(grad)
                round_bits += UNQUANTIZED_BITS_PER_COEFF * dim
                bpc = float(UNQUANTIZED_BITS_PER_COEFF)
        aggregate = np.mean(decoded, axis=0)
        model = fed_apply(model, aggregate, config.learner.lr)
        trace.append(model.parameters)
        cum_bits += round_bits
        rows.append(
            RoundMetrics(
                round=r,
                test_accuracy=evaluate(model, setup.test_X, setup.test_y),
                cum_bits=cum_bits,
                bits_per_coeff=bpc,
                wall_time_ms=(time.perf_counter() - t0) * 1e3,
            )
        )
    return RunResult(rows=rows, final_model=model, param_trace=tuple(trace))


def _aircomp_aggregate(
    gradients: list, config: ExperimentConfig, rng: RngStream, round_index: int
) -> tuple[np.ndarray, float]:
    """Transmit per-device gradients through one block-fading AirComp round.

    Gradients are packed into complex payloads, chunked into N-stream vector
    symbols, and sent simultaneously; returns (mean gradient estimate, mean
    per-symbol MSE of the received sums).
    """
    cc = config.channel
    n = cc.streams
    k_devices = len(gradients)
    dim = gradients[0].size
    channels = [
        sample_rayleigh_mimo(cc.m_r, cc.m_t, rng.child(TAG_CHANNEL, k, round_index), k)
        for k in range(k_devices)
    ]
    beamformer = aircomp.design_beamformer(channels, n)
    precoders = [aircomp.zf_precoder(ch, n)[0] for ch in channels]
    payloads = [aircomp.reals_to_complex(g) for g in gradients]
    sym_len = payloads[0].size
    n_chunks = math.ceil(sym_len / n)
    received = np.zeros(n_chunks * n, dtype=np.complex128)
    noise_var = cc.resolved_noise_variance()
    mses = []
    for c in range(n_chunks):
        sl = slice(c * n, (c + 1) * n)
        devices = []
        for k in range(k_devices):
            x = np.zeros(n, dtype=np.complex128)
            chunk = payloads[k][sl]
            x[: chunk.size] = chunk
            devices.append((channels[k], precoders[k], x))
        result = aircomp.transmit_round(
            beamformer,
            devices,
            noise_var,
            mode=cc.mode,
            rng=rng.child(TAG_NOISE, round_index, c),
        )
        received[sl] = aircomp.aircomp_average(result, k_devices)
        mses.append(result.mse)
    mean_grad = aircomp.complex_to_reals(received[:sym_len], dim)
    return mean_grad, float(np.mean(mses))


def run_federated_aircomp(config: ExperimentConfig) -> RunResult:
    """Federated loop whose aggregation happens over the air (analog).

    Raw local gradients are linear-analog modulated; the quantization
    section of the config is ignored. Bits columns stay empty (no digital
    payload); the per-round AirComp MSE is recorded instead.
    """
    setup = build_federated_setup(config)
    model = setup.model
    rng = RngStream(config.seed)
    rows = []
    trace = []
    for r in range(config.rounds):
        t0 = time.perf_counter()
        gradients = [fed_local_gradient(model, X, y) for X, y in setup.shards]
        mean_grad, mse = _aircomp_aggregate(gradients, config, rng, r)
        model = fed_apply(model, mean_grad, config.learner.lr)
        trace.append(model.parameters)
        rows.append(
            RoundMetrics(
                round=r,
                test_accuracy=evaluate(model, setup.test_X, setup.test_y),
                aircomp_mse=mse,
                wall_time_ms=(time.perf_counter() - t0) * 1e3,
            )
        )
    return RunResult(rows=rows, final_model=model, param_trace=tuple(trace))


@dataclass(frozen=True)
class SchedulingSetup:
    model: object
    pools: list  # per-device feature arrays
    labels: list  # hidden ground-truth labels, parallel to pools
    test_X: np.ndarray
    test_y: np.ndarray


def build_scheduling_setup(config: ExperimentConfig) -> SchedulingSetup:
    """Seed classifier, per-device unlabeled pools, and the clean test set."""
    rng = RngStream(config.seed)
    ds = config.dataset
    dim = config.learner.feature_dim
    seed_X, seed_y = two_gaussians(ds.seed_labeled, dim, ds.separation, rng.child(TAG_DATA, 0))
    mean, std = fit_standardizer(seed_X)
    seed_X = standardize(seed_X, mean, std)
    model = svm_init(
        seed_X,
        seed_y,
        C=config.learner.svm_c,
        step0=config.learner.svm_step0,
        tau=config.learner.svm_tau,
    )
    pools = []
    labels = []
    for k in range(config.devices):
        stream = rng.child(TAG_DATA, 1 + k)
        if ds.band_width > 0:
            band = (
                ds.band_start + k * ds.band_step,
                ds.band_start + k * ds.band_step + ds.band_width,
            )
            X, y = banded_pool(ds.pool_per_device, dim, ds.separation, band, stream)
        else:
            X, y = two_gaussians(ds.pool_per_device, dim, ds.separation, stream)
        pools.append(standardize(X, mean, std))
        labels.append(y)
    test_X, test_y = two_gaussians(
        ds.test_size, dim, ds.separation, rng.child(TAG_DATA, 1 + config.devices)
    )
    return SchedulingSetup(
        model=model,
        pools=pools,
        labels=labels,
        test_X=standardize(test_X, mean, std),
        test_y=test_y,
    )


def run_centralized_scheduling(config: ExperimentConfig) -> RunResult:
    """Fig. 3(b)-style acquisition: broadcast model, devices report DII,
    the scheduled device uploads its sample over a noisy analog link, the
    label is revealed at the server, and the SVM takes one update.

    Stops early (with the partial metrics flushed) if every pool empties.
    """
    setup = build_scheduling_setup(config)
    sc = config.scheduling
    cc = config.channel
    rng = RngStream(config.seed)
    model = setup.model
    pools = [np.array(p) for p in setup.pools]
    labels = [np.array(l) for l in setup.labels]
    rows = []
    links = None
    early = False
    for t in range(config.rounds):
        t0 = time.perf_counter()
        if links is None or cc.refresh_snr == "per_round":
            round_key = t if cc.refresh_snr == "per_round" else 0
            links = [
                sample_scalar_link(
                    cc.mean_snr_db, rng.child(TAG_LINK, k, round_key), k, cc.fading
                )
                for k in range(config.devices)
            ]
        reports = []
        for k in range(config.devices):
            if pools[k].shape[0] == 0:
                continue
            if sc.sample_mode == "random":
                pick = int(rng.child(TAG_SCHED, k, t).generator().integers(pools[k].shape[0]))
                unc = scheduling.distance_uncertainty(model, pools[k][pick])
                value, _ = scheduling.dii(links[k].snr_linear, [unc])
                reports.append(
                    scheduling.DeviceReport(
                        device_id=k,
                        snr_linear=links[k].snr_linear,
                        max_uncertainty=unc,
                        best_sample_index=pick,
                    )
                )
            else:
                reports.append(
                    scheduling.device_report(model, pools[k], links[k].snr_linear, k)
                )
        if not reports:
            log.warning("round %d: all device pools exhausted, stopping early", t)
            early = True
            break
        decision = scheduling.select_device(reports, sc.policy)
        winner = next(r for r in reports if r.device_id == decision.selected_device)
        k = winner.device_id
        if sc.policy == "channel_aware":
            # Data-oblivious baseline: no model-based sample ranking, so the
            # scheduled device uploads an arbitrary (random) pool sample.
            idx = int(
                rng.child(TAG_SCHED, config.devices, t)
                .generator()
                .integers(pools[k].shape[0])
            )
        else:
            idx = winner.best_sample_index
        received = noisy_receive(
            pools[k][idx], winner.snr_linear, rng.child(TAG_NOISE, t)
        )
        # label revealed at the server only after reception
        sample = LabeledSample(
            features=received, label=float(labels[k][idx]), origin_device=k
        )
        step = sc.svm_step0 / (1.0 + t / sc.svm_tau)
        model = svm_update(model, sample.features, sample.label, step)
        pools[k] = np.delete(pools[k], idx, axis=0)
        labels[k] = np.delete(labels[k], idx)
        rows.append(
            RoundMetrics(
                round=t,
                test_accuracy=evaluate(model, setup.test_X, setup.test_y),
                selected_device=k,
                wall_time_ms=(time.perf_counter() - t0) * 1e3,
            )
        )
    return RunResult(rows=rows, early_stopped=early, final_model=model)


def run_aircomp_sweep(config: ExperimentConfig) -> list:
    """Monte-Carlo AirComp error grid over (K, M_r, M_t, N, SNR, mode,
    beamformer); unit-power random payloads, block fading per trial."""
    sw = config.sweep
    rng = RngStream(config.seed)
    cells = []
    cell_index = 0
    for k_devices in sw.devices:
        for m_r in sw.m_r:
            for m_t in sw.m_t:
                for n in sw.streams:
                    if n > min(m_r, m_t):
                        raise ConfigError(
                            f"sweep cell infeasible: streams={n} > min({m_r}, {m_t})"
                        )
                    for snr_db in sw.snr_db:
                        noise_var = 10.0 ** (-float(snr_db) / 10.0)
                        for mode in sw.mode:
                            for bf_kind in sw.beamformer:
                                mses = np.empty(sw.trials)
                                powers = np.empty(sw.trials)
                                for trial in range(sw.trials):
                                    base = rng.child(TAG_SWEEP, cell_index, trial)
                                    channels = [
                                        sample_rayleigh_mimo(m_r, m_t, base.child(1, k), k)
                                        for k in range(k_devices)
                                    ]
                                    if bf_kind == "centroid":
                                        beamformer = aircomp.design_beamformer(channels, n)
                                    else:
                                        beamformer = aircomp.random_beamformer(
                                            m_r, n, base.child(2)
                                        )
                                    devices = []
                                    for k, ch in enumerate(channels):
                                        prec, _ = aircomp.zf_precoder(ch, n)
                                        gen = base.child(3, k).generator()
                                        x = (
                                            gen.standard_normal(n)
                                            + 1j * gen.standard_normal(n)
                                        ) / np.sqrt(2.0)
                                        devices.append((ch, prec, x))
                                    result = aircomp.transmit_round(
                                        beamformer,
                                        devices,
                                        noise_var,
                                        mode=mode,
                                        rng=base.child(4),
                                    )
                                    mses[trial] = result.mse
                                    powers[trial] = float(
                                        np.mean(result.per_device_tx_power)
                                    )
                                cells.append(
                                    SweepCell(
                                        devices=k_devices,
                                        m_r=m_r,
                                        m_t=m_t,
                                        streams=n,
                                        snr_db=float(snr_db),
                                        mode=mode,
                                        beamformer=bf_kind,
                                        trials=sw.trials,
                                        mean_mse=float(np.mean(mses)),
                                        mean_tx_power=float(np.mean(powers)),
                                    )
                                )
                                cell_index += 1
    return cells


def run_codebook_build(config: ExperimentConfig, out_path) -> CodebookBundle:
    """Build and save the codebook bundle described by the config."""
    bundle = build_codebook_bundle(config)
    if out_path is not None:
        save_bundle(bundle, out_path)
    return bundle


RUNNERS = {
    "federated_quantized": run_federated_quantized,
    "federated_aircomp": run_federated_aircomp,
    "centralized_scheduling": run_centralized_scheduling,
}


def run_experiment(config: ExperimentConfig):
    """Dispatch a config to its runner; returns RunResult or sweep cells."""
    if config.kind in RUNNERS:
        return RUNNERS[config.kind](config)
    if config.kind == "aircomp_sweep":
        return run_aircomp_sweep(config)
    if config.kind == "codebook_build":
        return run_codebook_build(config, config.out)
    raise ConfigError(f"unknown experiment kind {config.kind!r}")
