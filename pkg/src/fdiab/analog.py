"""Analog (RF) stage: SI-minimizing closed forms, MMSE/RegZF filters, CA projection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

SINGULARITY_RTOL = 1e-10


class NearSingularConstraint(np.linalg.LinAlgError):
    """Effective channel inside the equality constraint is rank deficient."""


@dataclass(frozen=True)
class InterferenceCovariance:
    """SI-plus-noise covariance seen at one side of the IAB node."""
    matrix: np.ndarray
    si_power: float
    noise_variance: float


def rx_si_covariance(h_si: np.ndarray, f_iab_rf: np.ndarray,
                     rho_s: float, sigma2: float) -> InterferenceCovariance:
    """Covariance of precoded SI plus noise at the IAB receive side."""
    if h_si.shape[1] != f_iab_rf.shape[0]:
        raise ValueError(f"shape mismatch: H_s {h_si.shape}, F {f_iab_rf.shape}")
    hf = h_si @ f_iab_rf
    r = rho_s * (hf @ hf.conj().T) + sigma2 * np.eye(h_si.shape[0])
    r = 0.5 * (r + r.conj().T)  # kill roundoff asymmetry
    return InterferenceCovariance(matrix=r, si_power=rho_s, noise_variance=sigma2)


def tx_si_covariance(h_si: np.ndarray, w_iab_rf: np.ndarray,
                     rho_s: float, sigma2: float) -> InterferenceCovariance:
    """Covariance of combined SI plus noise at the IAB transmit side."""
    return rx_si_covariance(h_si.conj().T, w_iab_rf, rho_s, sigma2)


def _constrained_minimizer(cov: InterferenceCovariance, effective: np.ndarray) -> np.ndarray:
    """Minimize Tr(X^H R X) subject to X^H * effective = (scalar) * I.

    Solved at unit scale first, then rescaled so Tr(X^H X) = 1; the scalar
    multiplies the whole solution and does not move the minimizing direction.
    """
    factor = cho_factor(cov.matrix, lower=True)
    rinv_eff = cho_solve(factor, effective)
    gram = effective.conj().T @ rinv_eff
    gram = 0.5 * (gram + gram.conj().T)
    svals = np.linalg.svd(gram, compute_uv=False)
    if svals[-1] < SINGULARITY_RTOL * svals[0]:
        raise NearSingularConstraint(
            f"constraint Gram matrix near singular (cond ~ {svals[0] / max(svals[-1], 1e-300):.2e})")
    x0 = np.linalg.solve(gram.conj().T, rinv_eff.conj().T).conj().T
    scale = 1.0 / np.sqrt(np.sum(np.abs(x0) ** 2))
    return scale * x0


def constrained_min_combiner(cov: InterferenceCovariance, h_backhaul: np.ndarray,
                             f_gnb_rf: np.ndarray) -> np.ndarray:
    """SI-minimizing analog combiner at the IAB node (closed form)."""
    return _constrained_minimizer(cov, h_backhaul @ f_gnb_rf)


def constrained_min_precoder(cov: InterferenceCovariance, h_access: np.ndarray,
                             w_ue_rf: np.ndarray) -> np.ndarray:
    """SI-minimizing analog precoder at the IAB node (closed form)."""
    return _constrained_minimizer(cov, h_access.conj().T @ w_ue_rf)


def mmse_combiner_ue(h_access: np.ndarray, f_iab_rf: np.ndarray, snr_a: float) -> np.ndarray:
    """Wiener-filter analog combiner at the UE."""
    n_ue = h_access.shape[0]
    hf = h_access @ f_iab_rf
    a = hf @ hf.conj().T + (n_ue / snr_a) * np.eye(n_ue)
    return np.linalg.solve(0.5 * (a + a.conj().T), hf)


def regzf_precoder_gnb(h_backhaul: np.ndarray, w_iab_rf: np.ndarray, snr_b: float) -> np.ndarray:
    """Regularized zero-forcing analog precoder at the gNB donor."""
    n_iab = h_backhaul.shape[0]
    hw = h_backhaul.conj().T @ w_iab_rf
    a = hw @ hw.conj().T + (n_iab / snr_b) * np.eye(h_backhaul.shape[1])
    return np.linalg.solve(0.5 * (a + a.conj().T), hw)


def ca_project(x: np.ndarray) -> np.ndarray:
    """Project onto the constant-amplitude set: keep phases, fix modulus 1/sqrt(rows).

    Zero entries get phase 0 (np.angle(0) == 0), so the map stays deterministic.
    """
    n = x.shape[0]
    return np.exp(1j * np.angle(x)) / np.sqrt(n)
