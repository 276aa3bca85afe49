"""Command-line interface.

    edgeflow run --config exp.yaml [--seed N] [--out metrics.csv]
    edgeflow sweep --config grid.yaml [--seed N] [--out sweep.csv]
    edgeflow codebook build --dim D [--blocks M] [--bits Brho,Bs,Bh]
                            [--kind isotropic] [--seed N] --out bundle.eclb
                            [--train-from pilots.npy]

Exit codes: 0 success, 2 configuration error, 3 runtime failure. The
EDGEFLOW_LOG environment variable (error|info|debug) sets log verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from .channel import RngStream
from .codebooks import save_bundle
from .config import ExperimentConfig, load_config
from .errors import ConfigError, EdgeflowError
from .gradquant import build_bundle
from .harness import RunResult, run_aircomp_sweep, run_experiment
from .metrics import write_metrics, write_sweep

log = logging.getLogger("edgeflow")

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging():
    level = os.environ.get("EDGEFLOW_LOG", "error").lower()
    if level not in _LOG_LEVELS:
        level = "error"
    logging.basicConfig(
        level=_LOG_LEVELS[level],
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgeflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("--config", required=True, help="YAML experiment config")
    p_run.add_argument("--seed", type=int, default=None, help="override config seed")
    p_run.add_argument("--out", default=None, help="override config output path")

    p_sweep = sub.add_parser("sweep", help="run an AirComp MSE grid")
    p_sweep.add_argument("--config", required=True, help="YAML sweep config")
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--out", default=None)

    p_cb = sub.add_parser("codebook", help="codebook utilities")
    cb_sub = p_cb.add_subparsers(dest="codebook_command", required=True)
    p_build = cb_sub.add_parser("build", help="build a codebook bundle")
    p_build.add_argument("--dim", type=int, required=True, help="gradient dimension")
    p_build.add_argument("--blocks", type=int, default=8, help="block count M")
    p_build.add_argument(
        "--bits",
        default="6,4,6",
        help="comma-separated norm,block,hinge bit widths",
    )
    p_build.add_argument(
        "--kind",
        default="isotropic",
        choices=["isotropic"],
        help="block codebook construction",
    )
    p_build.add_argument("--seed", type=int, default=0)
    p_build.add_argument("--out", required=True, help="output bundle path")
    p_build.add_argument(
        "--train-from",
        default=None,
        help=".npy array of pilot gradients for hinge/norm calibration",
    )
    return parser


def _resolve(config, args) -> ExperimentConfig:
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.out = args.out
    return config


def _cmd_run(args) -> int:
    config = _resolve(load_config(args.config), args)
    result = run_experiment(config)
    if config.kind == "aircomp_sweep":
        if config.out is None:
            raise ConfigError("sweep needs an output path (config out: or --out)")
        write_sweep(result, config.out)
        log.info("wrote %d sweep cells to %s", len(result), config.out)
    elif config.kind == "codebook_build":
        if config.out is None:
            raise ConfigError("codebook_build needs an output path")
        log.info("wrote codebook bundle to %s", config.out)
    else:
        assert isinstance(result, RunResult)
        if config.out is None:
            raise ConfigError("experiment needs an output path (config out: or --out)")
        write_metrics(result.rows, config.out)
        if result.early_stopped:
            log.warning("run stopped early; %d rounds recorded", len(result.rows))
        log.info("wrote %d rounds to %s", len(result.rows), config.out)
    return 0


def _cmd_sweep(args) -> int:
    config = _resolve(load_config(args.config), args)
    if config.kind != "aircomp_sweep":
        raise ConfigError(f"sweep subcommand needs kind=aircomp_sweep, got {config.kind!r}")
    cells = run_aircomp_sweep(config)
    if config.out is None:
        raise ConfigError("sweep needs an output path (config out: or --out)")
    write_sweep(cells, config.out)
    log.info("wrote %d sweep cells to %s", len(cells), config.out)
    return 0


def _cmd_codebook_build(args) -> int:
    try:
        norm_bits, block_bits, hinge_bits = (int(x) for x in args.bits.split(","))
    except ValueError:
        raise ConfigError(f"--bits must be three comma-separated ints, got {args.bits!r}")
    pilots = None
    if args.train_from is not None:
        if not os.path.exists(args.train_from):
            raise ConfigError(f"pilot file not found: {args.train_from}")
        pilots = np.load(args.train_from)
        if pilots.ndim != 2 or pilots.shape[1] != args.dim:
            raise ConfigError(
                f"pilot array must be (n, {args.dim}), got {pilots.shape}"
            )
    bundle = build_bundle(
        dim=args.dim,
        blocks=args.blocks,
        norm_bits=norm_bits,
        block_bits=block_bits,
        hinge_bits=hinge_bits,
        rng=RngStream(args.seed),
        pilot_gradients=pilots,
    )
    save_bundle(bundle, args.out)
    log.info("wrote codebook bundle to %s", args.out)
    return 0


def main(argv=None) -> int:
    _setup_logging()
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "codebook":
            return _cmd_codebook_build(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        log.error("%s", exc)
        print(f"edgeflow: config error: {exc}", file=sys.stderr)
        return 2
    except (EdgeflowError, OSError) as exc:
        log.error("%s", exc)
        print(f"edgeflow: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
