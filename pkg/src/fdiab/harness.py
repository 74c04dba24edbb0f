"""Monte Carlo orchestration: seeded trials, scheme comparison, CSV export."""

from __future__ import annotations

import csv
import hashlib
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analog import NearSingularConstraint
from .channel import draw_channel_set
from .config import SystemConfig, db_to_linear
from .digital import (
    DesignTrace,
    RankDeficientRF,
    all_digital_design,
    half_duplex_evaluate,
    hybrid_design,
    svd_baseline_design,
)
from .metrics import SingularNoiseCovariance, access_rate, backhaul_rate, upper_bound

SCHEMES = ("proposed", "all_digital", "svd_baseline", "half_duplex", "upper_bound")

RESULT_HEADER = "snr_db,seed,scheme,sum_se_bits,iterations,flops,converged"
SUMMARY_HEADER = "snr_db,scheme,mean_sum_se_bits,ci95_half_width,num_trials,failures"


@dataclass
class TrialRecord:
    """Metrics for one (SNR point, channel realization) pair."""
    snr_db: float
    seed: int
    trial_index: int
    sum_se: dict = field(default_factory=dict)        # scheme -> bits/s/Hz
    iterations: dict = field(default_factory=dict)    # scheme -> loop iterations
    flops: dict = field(default_factory=dict)         # scheme -> flop estimate
    converged: dict = field(default_factory=dict)     # scheme -> bool
    failed: bool = False
    error: str = ""


def derive_seed(master_seed: int, trial_index: int, snr_index: int) -> int:
    """Stable per-trial seed: SHA-256 over the identifying triple."""
    digest = hashlib.sha256(
        f"{master_seed}:{trial_index}:{snr_index}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


def run_trial(cfg: SystemConfig, snr_db: float, seed: int, trial_index: int) -> TrialRecord:
    """Draw one channel set and evaluate all five schemes on it."""
    record = TrialRecord(snr_db=snr_db, seed=seed, trial_index=trial_index)
    snr = db_to_linear(snr_db)
    rng = np.random.default_rng(seed)
    try:
        channels = draw_channel_set(cfg, rng)

        beams, trace = hybrid_design(channels, cfg, snr_db, rng=rng)
        record.sum_se["proposed"] = (
            backhaul_rate(beams, channels, snr, cfg.rho_s)
            + access_rate(beams, channels, snr))
        record.iterations["proposed"] = trace.iteration_count
        record.flops["proposed"] = trace.flops_estimate
        record.converged["proposed"] = trace.converged

        beams_d, trace_d = all_digital_design(channels, cfg, snr_db)
        record.sum_se["all_digital"] = (
            backhaul_rate(beams_d, channels, snr, cfg.rho_s)
            + access_rate(beams_d, channels, snr))
        record.iterations["all_digital"] = trace_d.iteration_count
        record.flops["all_digital"] = trace_d.flops_estimate
        record.converged["all_digital"] = trace_d.converged

        beams_s = svd_baseline_design(channels, cfg)
        record.sum_se["svd_baseline"] = (
            backhaul_rate(beams_s, channels, snr, cfg.rho_s)
            + access_rate(beams_s, channels, snr))

        record.sum_se["half_duplex"] = half_duplex_evaluate(channels, cfg, snr_db)
        record.sum_se["upper_bound"] = (
            upper_bound(channels.h_backhaul, snr, cfg.n_streams)
            + upper_bound(channels.h_access, snr, cfg.n_streams))

        for scheme in ("svd_baseline", "half_duplex", "upper_bound"):
            record.iterations[scheme] = 0
            record.flops[scheme] = 0
            record.converged[scheme] = True
    except (NearSingularConstraint, RankDeficientRF, SingularNoiseCovariance) as exc:
        record.failed = True
        record.error = f"{type(exc).__name__}: {exc}"
    return record


def _trial_args(cfg: SystemConfig):
    for snr_index, snr_db in enumerate(cfg.snr_db):
        for trial_index in range(cfg.trials):
            yield cfg, snr_db, derive_seed(cfg.master_seed, trial_index, snr_index), trial_index


def run_sweep(cfg: SystemConfig) -> list[TrialRecord]:
    """Run the full (SNR x trials) grid; records come back in grid order."""
    cfg.validate()
    args = list(_trial_args(cfg))
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_run_trial_star, args, chunksize=4))
    else:
        records = [run_trial(*a) for a in args]
    return records


def _run_trial_star(args):
    return run_trial(*args)


def run_convergence_study(cfg: SystemConfig, seed: int,
                          snr_db: float = 0.0) -> DesignTrace:
    """Single-realization SI-power trace at the convergence-study operating point."""
    cfg.validate()
    rng = np.random.default_rng(seed)
    channels = draw_channel_set(cfg, rng)
    _, trace = hybrid_design(channels, cfg, snr_db, rng=rng)
    return trace


def export_trace(trace: DesignTrace, path) -> None:
    """Columnar text: iteration index, analog SI power, hybrid SI power."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iteration analog_si_power hybrid_si_power\n")
        fh.write(f"0 {trace.initial_analog_si:.12g} {trace.initial_hybrid_si:.12g}\n")
        for i, (ja, jh) in enumerate(zip(trace.analog_si_power, trace.hybrid_si_power), start=1):
            fh.write(f"{i} {ja:.12g} {jh:.12g}\n")


def _pairwise_sum(values: list) -> float:
    """Order-stable pairwise summation of an already-sorted list."""
    n = len(values)
    if n == 0:
        return 0.0
    if n == 1:
        return values[0]
    mid = n // 2
    return _pairwise_sum(values[:mid]) + _pairwise_sum(values[mid:])


def summarize(records: list[TrialRecord]) -> list[dict]:
    """Per-(SNR, scheme) means and 95% confidence half-widths.

    Failed records are excluded from the means and counted separately.
    Sums run over seed-sorted values so the result is order independent.
    """
    rows = []
    snr_points = sorted({r.snr_db for r in records})
    for snr_db in snr_points:
        group = [r for r in records if r.snr_db == snr_db]
        failures = sum(r.failed for r in group)
        good = sorted((r for r in group if not r.failed), key=lambda r: r.seed)
        for scheme in SCHEMES:
            values = [r.sum_se[scheme] for r in good]
            n = len(values)
            mean = _pairwise_sum(values) / n if n else float("nan")
            if n > 1:
                var = _pairwise_sum([(v - mean) ** 2 for v in values]) / (n - 1)
                half_width = 1.96 * math.sqrt(var / n)
            else:
                half_width = float("nan")
            rows.append({"snr_db": snr_db, "scheme": scheme,
                         "mean_sum_se_bits": mean, "ci95_half_width": half_width,
                         "num_trials": n, "failures": failures})
    return rows


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def export_results(records: list[TrialRecord], out_dir) -> tuple[str, str]:
    """Write results.csv (one row per trial x scheme) and summary.csv."""
    if not records:
        raise ValueError("no records to export")
    os.makedirs(out_dir, exist_ok=True)
    results_path = os.path.join(out_dir, "results.csv")
    summary_path = os.path.join(out_dir, "summary.csv")
    try:
        with open(results_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(RESULT_HEADER + "\n")
            for rec in records:
                if rec.failed:
                    continue
                for scheme in SCHEMES:
                    fh.write(",".join([
                        _fmt(rec.snr_db), str(rec.seed), scheme,
                        _fmt(rec.sum_se[scheme]),
                        str(rec.iterations[scheme]), str(rec.flops[scheme]),
                        str(rec.converged[scheme]).lower(),
                    ]) + "\n")
        with open(summary_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(SUMMARY_HEADER + "\n")
            for row in summarize(records):
                fh.write(",".join([
                    _fmt(row["snr_db"]), row["scheme"],
                    _fmt(row["mean_sum_se_bits"]), _fmt(row["ci95_half_width"]),
                    str(row["num_trials"]), str(row["failures"]),
                ]) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing results under {out_dir}: {exc}") from exc
    return results_path, summary_path


def parse_results(path) -> list[dict]:
    """Read back results.csv rows with typed fields."""
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            out.append({
                "snr_db": float(row["snr_db"]),
                "seed": int(row["seed"]),
                "scheme": row["scheme"],
                "sum_se_bits": float(row["sum_se_bits"]),
                "iterations": int(row["iterations"]),
                "flops": int(row["flops"]),
                "converged": row["converged"] == "true",
            })
    return out
