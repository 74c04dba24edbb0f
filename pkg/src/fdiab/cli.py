"""Command-line entry point: simulate, converge, and flops subcommands."""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from .config import ConfigError, SystemConfig, load_config
from .harness import export_results, export_trace, run_convergence_study, run_sweep
from .metrics import flop_model

CONFIG_ENV_VAR = "FDIAB_CONFIG"


def _parse_snr_range(text: str) -> tuple:
    """Parse 'a:b:step' (inclusive) or a comma-separated list of dB points."""
    try:
        if ":" in text:
            start, stop, step = (float(tok) for tok in text.split(":"))
            if step <= 0:
                raise ValueError("step must be positive")
            points = []
            x = start
            while x <= stop + 1e-9:
                points.append(round(x, 9))
                x += step
            return tuple(points)
        return tuple(float(tok) for tok in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad SNR range {text!r}: {exc}") from exc


def _load_cfg(path: str | None) -> SystemConfig:
    path = path or os.environ.get(CONFIG_ENV_VAR)
    if path:
        return load_config(path)
    return SystemConfig().validate()


def _cmd_simulate(args) -> int:
    cfg = _load_cfg(args.config)
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.snr is not None:
        overrides["snr_db"] = _parse_snr_range(args.snr)
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides).validate()
    records = run_sweep(cfg)
    results_path, summary_path = export_results(records, args.out)
    failures = sum(r.failed for r in records)
    print(f"wrote {results_path} and {summary_path} "
          f"({len(records)} trials, {failures} flagged)")
    return 0


def _cmd_converge(args) -> int:
    cfg = _load_cfg(args.config)
    trace = run_convergence_study(cfg, seed=args.seed)
    export_trace(trace, args.out)
    print(f"wrote {args.out}: {trace.iteration_count} iterations, "
          f"converged={trace.converged}, "
          f"analog SI {trace.initial_analog_si:.4g} -> {trace.analog_si_power[-1]:.4g}, "
          f"hybrid SI -> {trace.hybrid_si_power[-1]:.4g}, "
          f"~{trace.flops_estimate / 1e6:.3g} Mflops")
    return 0


def _cmd_flops(args) -> int:
    cfg = _load_cfg(args.config)
    report = flop_model(cfg)
    width = max(len(name) for name in report.entries)
    for name, count in report.entries.items():
        print(f"{name:<{width}}  {count:>8d}  dominant: {report.dominant_terms[name]}")
    print(f"{'total':<{width}}  {report.total:>8d}")
    for name, (formula, reference) in report.discrepancies.items():
        print(f"note: {name} formula gives {formula}, reference total is {reference} "
              f"(extra {reference - formula})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdiab",
        description="Full-duplex IAB hybrid beamforming simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the Monte Carlo SNR sweep")
    sim.add_argument("--config", help=f"config file (or ${CONFIG_ENV_VAR})")
    sim.add_argument("--trials", type=int)
    sim.add_argument("--snr", help="a:b:step in dB, or comma-separated points")
    sim.add_argument("--seed", type=int, help="master seed override")
    sim.add_argument("--out", required=True, help="output directory")
    sim.set_defaults(func=_cmd_simulate)

    conv = sub.add_parser("converge", help="export one SI-power convergence trace")
    conv.add_argument("--config", help=f"config file (or ${CONFIG_ENV_VAR})")
    conv.add_argument("--seed", type=int, required=True)
    conv.add_argument("--out", required=True, help="output trace file")
    conv.set_defaults(func=_cmd_converge)

    flops = sub.add_parser("flops", help="print the per-iteration flop model")
    flops.add_argument("--config", help=f"config file (or ${CONFIG_ENV_VAR})")
    flops.set_defaults(func=_cmd_flops)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
