"""Spectral-efficiency evaluation, SI-power objectives, and the flop-cost model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import SystemConfig


class SingularNoiseCovariance(np.linalg.LinAlgError):
    """Combiner is rank deficient, so the noise covariance cannot be inverted."""


@dataclass(frozen=True)
class LinkRates:
    """Per-link spectral efficiencies and their SI-free upper bounds (bits/s/Hz)."""
    backhaul: float
    access: float
    bound_backhaul: float
    bound_access: float

    @property
    def total(self) -> float:
        return self.backhaul + self.access


def _logdet2_psd(m: np.ndarray) -> float:
    """log2 det of a Hermitian PSD matrix via eigenvalues; tiny negatives clipped."""
    eigs = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    eigs = np.where(eigs < 1e-12, np.maximum(eigs, 1e-300), eigs)
    return float(np.sum(np.log2(eigs)))


def _noise_covariance(w: np.ndarray, sigma2: float, extra: np.ndarray | None = None) -> np.ndarray:
    q = sigma2 * (w.conj().T @ w)
    if extra is not None:
        q = q + extra
    q = 0.5 * (q + q.conj().T)
    eigs = np.linalg.eigvalsh(q)
    if eigs[-1] <= 0 or eigs[0] < 1e-14 * eigs[-1]:
        raise SingularNoiseCovariance("combiner Gram matrix is rank deficient")
    # conditioning guard, applied only when the matrix is borderline
    if eigs[0] < 1e-12 * np.trace(q).real:
        q = q + (1e-12 * np.trace(q).real) * np.eye(q.shape[0])
    return q


def _logdet_rate(t: np.ndarray, q: np.ndarray, rho: float) -> float:
    """log2 det(I + rho * T Q^{-1} T^H) for effective channel T."""
    m = np.eye(t.shape[0]) + rho * (t @ np.linalg.solve(q, t.conj().T))
    return max(_logdet2_psd(m), 0.0)


def backhaul_rate(beams, channels, rho_b: float, rho_s: float, sigma2: float = 1.0) -> float:
    """Backhaul spectral efficiency with residual SI treated as colored noise."""
    w = beams.w_iab
    f_gnb = beams.f_gnb
    f_iab = beams.f_iab
    wsf = w.conj().T @ channels.h_si @ f_iab
    q_b = _noise_covariance(w, sigma2, extra=rho_s * (wsf @ wsf.conj().T))
    t = w.conj().T @ channels.h_backhaul @ f_gnb
    return _logdet_rate(t, q_b, rho_b)


def access_rate(beams, channels, rho_a: float, sigma2: float = 1.0) -> float:
    """Access spectral efficiency; the UE sees no self-interference."""
    w = beams.w_ue
    q_a = _noise_covariance(w, sigma2)
    t = w.conj().T @ channels.h_access @ beams.f_iab
    return _logdet_rate(t, q_a, rho_a)


def upper_bound(h: np.ndarray, snr: float, n_streams: int) -> float:
    """SI-free eigen-beamforming bound from the top channel singular values."""
    svals = np.linalg.svd(h, compute_uv=False)
    if n_streams > len(svals):
        raise ValueError("n_streams exceeds channel rank bound")
    return float(np.sum(np.log2(1.0 + snr * svals[:n_streams] ** 2)))


def effective_si_power(w_rf: np.ndarray, f_rf: np.ndarray, h_si: np.ndarray,
                       rho_s: float, sigma2: float) -> tuple[float, float]:
    """Residual SI trace objective and its total including the noise floor.

    Returns (J, J + sigma2 * n_rf) with J = rho_s * ||W^H H_s F||_F^2.
    """
    j = rho_s * float(np.linalg.norm(w_rf.conj().T @ h_si @ f_rf, "fro") ** 2)
    return j, j + sigma2 * w_rf.shape[1]


# ---------------------------------------------------------------------------
# Flop-cost model
#
# Counting rules: a (m x n)(n x p) product costs n*m*p flops, a Hermitian
# n x n inverse via Cholesky costs n^3/3, and a Gramian A A^H with A m x n
# costs n*m^2/2. Each per-update count keeps only the highest-order terms.
# ---------------------------------------------------------------------------

#: Reference per-update totals for the default 32/32/4-antenna dimensions.
#: The two IAB RF rows exceed their own symbolic expressions by exactly
#: (3/2) * N_IAB^2 * N_RF = 3072; flop_model reports the discrepancy.
REFERENCE_FLOPS = {
    "w_iab_rf": 21165,
    "f_iab_rf": 19373,
    "f_gnb_rf": 13995,
    "w_iab_bb": 4360,
    "f_iab_bb": 4360,
    "f_gnb_bb": 4360,
    "w_ue_bb": 328,
    "w_ue_rf": 70,
}


@dataclass(frozen=True)
class FlopReport:
    """Per-beamformer flop counts for one design-loop iteration."""
    entries: dict
    dominant_terms: dict
    total: int
    discrepancies: dict = field(default_factory=dict)


def _si_min_update_flops(n_node: int, n_other: int, n_rf: int) -> float:
    # constrained SI-minimizing update: Gramian, Cholesky inverse, projections
    return (1.5 * n_node**2 * n_rf + n_node**3 / 3.0
            + n_other * n_node * n_rf + n_rf**3 / 3.0 + n_node**2 * n_rf)


def _linear_filter_flops(n_node: int, n_rf: int) -> float:
    # MMSE / regularized-ZF update: Gramian plus Cholesky inverse
    return 1.5 * n_node**2 * n_rf + n_node**3 / 3.0


def _digital_update_flops(n_node: int, n_rf: int, n_streams: int) -> float:
    # SVD-based digital update: two thin SVDs plus the recomposition products
    return (9.0 * n_rf**2 * n_node + 9.0 * n_streams**2 * n_node
            + n_node**2 * n_streams + n_streams**3)


def flop_model(cfg: SystemConfig) -> FlopReport:
    """Evaluate the symbolic per-update costs at the configured dimensions."""
    raw = {
        "w_iab_rf": _si_min_update_flops(cfg.n_iab, cfg.n_gnb, cfg.n_rf),
        "f_iab_rf": _si_min_update_flops(cfg.n_iab, cfg.n_ue, cfg.n_rf),
        "f_gnb_rf": _linear_filter_flops(cfg.n_gnb, cfg.n_rf),
        "w_iab_bb": _digital_update_flops(cfg.n_iab, cfg.n_rf, cfg.n_streams),
        "f_iab_bb": _digital_update_flops(cfg.n_iab, cfg.n_rf, cfg.n_streams),
        "f_gnb_bb": _digital_update_flops(cfg.n_gnb, cfg.n_rf, cfg.n_streams),
        "w_ue_bb": _digital_update_flops(cfg.n_ue, cfg.n_rf, cfg.n_streams),
        "w_ue_rf": _linear_filter_flops(cfg.n_ue, cfg.n_rf),
    }
    entries = {name: int(math.ceil(value)) for name, value in raw.items()}
    dominant = {
        "w_iab_rf": "N_IAB^3/3",
        "f_iab_rf": "N_IAB^3/3",
        "f_gnb_rf": "N_gNB^3/3",
        "w_iab_bb": "N_IAB^2*N_s",
        "f_iab_bb": "N_IAB^2*N_s",
        "f_gnb_bb": "N_gNB^2*N_s",
        "w_ue_bb": "9*N_RF^2*N_UE",
        "w_ue_rf": "3/2*N_UE^2*N_RF",
    }
    at_reference_dims = (cfg.n_gnb, cfg.n_iab, cfg.n_ue, cfg.n_rf, cfg.n_streams) == (32, 32, 4, 2, 2)
    discrepancies = {}
    if at_reference_dims:
        discrepancies = {name: (entries[name], ref)
                         for name, ref in REFERENCE_FLOPS.items()
                         if entries[name] != ref}
    return FlopReport(entries=entries, dominant_terms=dominant,
                      total=sum(entries.values()), discrepancies=discrepancies)


def design_iteration_flops(cfg: SystemConfig) -> int:
    """Estimated flops for one full design-loop iteration."""
    return flop_model(cfg).total
