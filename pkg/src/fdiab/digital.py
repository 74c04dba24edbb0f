"""Digital stage and the full alternating hybrid design loop, plus baselines."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analog import (
    NearSingularConstraint,
    ca_project,
    constrained_min_combiner,
    constrained_min_precoder,
    mmse_combiner_ue,
    regzf_precoder_gnb,
    rx_si_covariance,
    tx_si_covariance,
)
from .channel import ChannelSet
from .config import SystemConfig, db_to_linear
from .metrics import design_iteration_flops, effective_si_power

RANK_RTOL = 1e-10


class RankDeficientRF(np.linalg.LinAlgError):
    """Analog factor lost column rank, so the digital closed form is undefined."""


@dataclass
class HybridBeamformerSet:
    """The eight analog/digital factors of the four hybrid beamformers."""
    f_gnb_rf: np.ndarray
    f_gnb_bb: np.ndarray
    f_iab_rf: np.ndarray
    f_iab_bb: np.ndarray
    w_iab_rf: np.ndarray
    w_iab_bb: np.ndarray
    w_ue_rf: np.ndarray
    w_ue_bb: np.ndarray
    n_streams: int

    @property
    def f_gnb(self) -> np.ndarray:
        return self.f_gnb_rf @ self.f_gnb_bb

    @property
    def f_iab(self) -> np.ndarray:
        return self.f_iab_rf @ self.f_iab_bb

    @property
    def w_iab(self) -> np.ndarray:
        return self.w_iab_rf @ self.w_iab_bb

    @property
    def w_ue(self) -> np.ndarray:
        return self.w_ue_rf @ self.w_ue_bb


@dataclass
class DesignTrace:
    """Per-iteration SI-power history of one design run."""
    analog_si_power: list = field(default_factory=list)   # J with RF factors
    hybrid_si_power: list = field(default_factory=list)   # J with composed products
    initial_analog_si: float = 0.0
    initial_hybrid_si: float = 0.0
    iteration_count: int = 0
    converged: bool = False
    monotone_violation: bool = False
    flops_estimate: int = 0


def digital_stage(x_rf: np.ndarray, a: np.ndarray, n_streams: int) -> np.ndarray:
    """Optimal digital factor for a fixed analog factor.

    With x_rf = U S V^H, the composed product x_rf @ x_bb equals U Q where Q
    holds the n_streams dominant left singular vectors of U^H a, so the
    composed beamformer always has orthonormal columns.
    """
    u, s, vh = np.linalg.svd(x_rf, full_matrices=False)
    if s[-1] < RANK_RTOL * s[0]:
        raise RankDeficientRF("analog factor is numerically rank deficient")
    if n_streams > x_rf.shape[1]:
        raise ValueError("n_streams exceeds the number of analog chains")
    q, _, _ = np.linalg.svd(u.conj().T @ a, full_matrices=True)
    q_star = q[:, :n_streams]
    return vh.conj().T @ (q_star / s[:, None])


def _svd_columns(h: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-k left and right singular vectors of h."""
    u, _, vh = np.linalg.svd(h, full_matrices=False)
    return u[:, :k], vh.conj().T[:, :k]


def _initial_rf(channels: ChannelSet, cfg: SystemConfig,
                rng: np.random.Generator | None) -> tuple[np.ndarray, ...]:
    """SI-agnostic warm start: CA projection of per-link singular vectors."""
    if cfg.random_init:
        if rng is None:
            rng = np.random.default_rng(cfg.master_seed)
        def draw(rows):
            g = rng.standard_normal((rows, cfg.n_rf)) + 1j * rng.standard_normal((rows, cfg.n_rf))
            return ca_project(g)
        return draw(cfg.n_iab), draw(cfg.n_iab), draw(cfg.n_ue), draw(cfg.n_gnb)
    w_iab, f_gnb = _svd_columns(channels.h_backhaul, cfg.n_rf)
    w_ue, f_iab = _svd_columns(channels.h_access, cfg.n_rf)
    return ca_project(w_iab), ca_project(f_iab), ca_project(w_ue), ca_project(f_gnb)


def _digital_pass(rf: dict, composed: dict, channels: ChannelSet, n_streams: int) -> dict:
    """One sweep of the digital closed form over all four beamformers.

    The cross arguments use the composed products from the previous iteration.
    """
    return {
        "w_iab": digital_stage(rf["w_iab"], channels.h_backhaul @ composed["f_gnb"], n_streams),
        "f_iab": digital_stage(rf["f_iab"], channels.h_access.conj().T @ composed["w_ue"], n_streams),
        "w_ue": digital_stage(rf["w_ue"], channels.h_access @ composed["f_iab"], n_streams),
        "f_gnb": digital_stage(rf["f_gnb"], channels.h_backhaul.conj().T @ composed["w_iab"], n_streams),
    }


def _check_monotone(history: list, band: float = 0.01) -> bool:
    """True if the trace rises by more than the tolerance band after iteration 2."""
    for prev, cur in zip(history[1:], history[2:]):
        if cur > prev * (1.0 + band) + 1e-12:
            return True
    return False


def _analog_update(rf: dict, channels: ChannelSet, rho_s: float, snr: float,
                   apply_ca: bool, sigma2: float) -> dict:
    """One full sweep of the four analog closed forms.

    Updates are sequential: each covariance and filter uses the factors
    refreshed earlier in the same sweep, otherwise the receive- and
    transmit-side SI nulls chase each other and the objective oscillates.
    """
    project = ca_project if apply_ca else (lambda x: x)
    out = dict(rf)
    cov_rx = rx_si_covariance(channels.h_si, out["f_iab"], rho_s, sigma2)
    out["w_iab"] = project(constrained_min_combiner(cov_rx, channels.h_backhaul, out["f_gnb"]))
    cov_tx = tx_si_covariance(channels.h_si, out["w_iab"], rho_s, sigma2)
    out["f_iab"] = project(constrained_min_precoder(cov_tx, channels.h_access, out["w_ue"]))
    out["w_ue"] = project(mmse_combiner_ue(channels.h_access, out["f_iab"], snr))
    out["f_gnb"] = project(regzf_precoder_gnb(channels.h_backhaul, out["w_iab"], snr))
    return out


def _alternating_design(channels: ChannelSet, cfg: SystemConfig, snr_db: float,
                        rf: dict, bb: dict, apply_ca: bool,
                        sigma2: float = 1.0) -> tuple[dict, dict, DesignTrace]:
    """Shared alternating loop for the hybrid and all-digital designs.

    Descent is safeguarded: a sweep is accepted only if it does not increase
    the SI-plus-noise objective, so the recorded trace is non-increasing and
    the loop terminates as soon as the analog stage stops improving. The CA
    projection alone would otherwise drive the iterates into limit cycles.
    """
    snr = db_to_linear(snr_db)
    rho_s = cfg.rho_s
    n_streams = cfg.n_streams
    h_s = channels.h_si

    composed = {k: rf[k] @ bb[k] for k in rf}
    trace = DesignTrace()
    trace.initial_analog_si, prev_total = effective_si_power(
        rf["w_iab"], rf["f_iab"], h_s, rho_s, sigma2)
    trace.initial_hybrid_si, _ = effective_si_power(
        composed["w_iab"], composed["f_iab"], h_s, rho_s, sigma2)

    # make the composed products semi-unitary before the first sweep
    bb = _digital_pass(rf, composed, channels, n_streams)
    composed = {k: rf[k] @ bb[k] for k in rf}

    for _ in range(cfg.max_iters):
        candidate = _analog_update(rf, channels, rho_s, snr, apply_ca, sigma2)
        j_analog, total = effective_si_power(
            candidate["w_iab"], candidate["f_iab"], h_s, rho_s, sigma2)
        if total > prev_total:
            trace.converged = True  # no further analog improvement available
            break
        rf = candidate
        bb = _digital_pass(rf, composed, channels, n_streams)
        composed = {k: rf[k] @ bb[k] for k in rf}
        j_hybrid, _ = effective_si_power(composed["w_iab"], composed["f_iab"], h_s, rho_s, sigma2)
        trace.analog_si_power.append(j_analog)
        trace.hybrid_si_power.append(j_hybrid)
        trace.iteration_count += 1
        if abs(total - prev_total) < cfg.tol * max(prev_total, 1e-300):
            trace.converged = True
            prev_total = total
            break
        prev_total = total

    totals = [trace.initial_analog_si] + trace.analog_si_power
    trace.monotone_violation = _check_monotone(totals)
    trace.flops_estimate = trace.iteration_count * design_iteration_flops(cfg)
    return rf, bb, trace


def hybrid_design(channels: ChannelSet, cfg: SystemConfig, snr_db: float = 0.0,
                  rng: np.random.Generator | None = None) -> tuple[HybridBeamformerSet, DesignTrace]:
    """Full alternating analog/digital design with CA-constrained RF factors."""
    w_iab, f_iab, w_ue, f_gnb = _initial_rf(channels, cfg, rng)
    rf = {"w_iab": w_iab, "f_iab": f_iab, "w_ue": w_ue, "f_gnb": f_gnb}
    bb0 = np.eye(cfg.n_rf, cfg.n_streams, dtype=complex)
    bb = {k: bb0.copy() for k in rf}
    rf, bb, trace = _alternating_design(channels, cfg, snr_db, rf, bb, apply_ca=True)
    beams = HybridBeamformerSet(
        f_gnb_rf=rf["f_gnb"], f_gnb_bb=bb["f_gnb"],
        f_iab_rf=rf["f_iab"], f_iab_bb=bb["f_iab"],
        w_iab_rf=rf["w_iab"], w_iab_bb=bb["w_iab"],
        w_ue_rf=rf["w_ue"], w_ue_bb=bb["w_ue"],
        n_streams=cfg.n_streams)
    return beams, trace


def all_digital_design(channels: ChannelSet, cfg: SystemConfig,
                       snr_db: float = 0.0) -> tuple[HybridBeamformerSet, DesignTrace]:
    """Unconstrained per-antenna benchmark: same loop, stream-wide factors, no CA."""
    import dataclasses
    cfg_d = dataclasses.replace(cfg, n_rf=cfg.n_streams)
    w_iab, f_gnb = _svd_columns(channels.h_backhaul, cfg.n_streams)
    w_ue, f_iab = _svd_columns(channels.h_access, cfg.n_streams)
    rf = {"w_iab": w_iab, "f_iab": f_iab, "w_ue": w_ue, "f_gnb": f_gnb}
    bb = {k: np.eye(cfg.n_streams, dtype=complex) for k in rf}
    rf, bb, trace = _alternating_design(channels, cfg_d, snr_db, rf, bb, apply_ca=False)
    # report per-antenna factors as a single digital stage behind identity RF
    def identity_set(key, rows):
        return np.eye(rows, dtype=complex), rf[key] @ bb[key]
    f_gnb_rf, f_gnb_bb = identity_set("f_gnb", cfg.n_gnb)
    f_iab_rf, f_iab_bb = identity_set("f_iab", cfg.n_iab)
    w_iab_rf, w_iab_bb = identity_set("w_iab", cfg.n_iab)
    w_ue_rf, w_ue_bb = identity_set("w_ue", cfg.n_ue)
    beams = HybridBeamformerSet(
        f_gnb_rf=f_gnb_rf, f_gnb_bb=f_gnb_bb,
        f_iab_rf=f_iab_rf, f_iab_bb=f_iab_bb,
        w_iab_rf=w_iab_rf, w_iab_bb=w_iab_bb,
        w_ue_rf=w_ue_rf, w_ue_bb=w_ue_bb,
        n_streams=cfg.n_streams)
    return beams, trace


def svd_baseline_design(channels: ChannelSet, cfg: SystemConfig) -> HybridBeamformerSet:
    """SI-agnostic comparator: eigen-beams per link, then one digital pass."""
    w_iab, f_gnb = _svd_columns(channels.h_backhaul, cfg.n_rf)
    w_ue, f_iab = _svd_columns(channels.h_access, cfg.n_rf)
    rf = {"w_iab": ca_project(w_iab), "f_iab": ca_project(f_iab),
          "w_ue": ca_project(w_ue), "f_gnb": ca_project(f_gnb)}
    bb0 = np.eye(cfg.n_rf, cfg.n_streams, dtype=complex)
    composed = {k: rf[k] @ bb0 for k in rf}
    bb = _digital_pass(rf, composed, channels, cfg.n_streams)
    return HybridBeamformerSet(
        f_gnb_rf=rf["f_gnb"], f_gnb_bb=bb["f_gnb"],
        f_iab_rf=rf["f_iab"], f_iab_bb=bb["f_iab"],
        w_iab_rf=rf["w_iab"], w_iab_bb=bb["w_iab"],
        w_ue_rf=rf["w_ue"], w_ue_bb=bb["w_ue"],
        n_streams=cfg.n_streams)


def half_duplex_evaluate(channels: ChannelSet, cfg: SystemConfig,
                         snr_db: float = 0.0) -> float:
    """Half-duplex comparator: SI-free eigen-beams per link at half the resource."""
    from .metrics import access_rate, backhaul_rate
    beams = svd_baseline_design(channels, cfg)
    snr = db_to_linear(snr_db)
    rate_b = backhaul_rate(beams, channels, rho_b=snr, rho_s=0.0)
    rate_a = access_rate(beams, channels, rho_a=snr)
    return 0.5 * (rate_b + rate_a)
