"""Channel generation: clustered geometric links and the near-field SI channel.

All distances are expressed in carrier wavelengths. Random draws consume an
explicit numpy Generator so every realization is reproducible from its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array: element count and pitch d/lambda."""
    num_antennas: int
    spacing: float = 0.5

    def __post_init__(self):
        if self.num_antennas < 1:
            raise ValueError("num_antennas must be >= 1")
        if self.spacing <= 0:
            raise ValueError("element spacing must be positive")


@dataclass(frozen=True)
class ClusterChannelParams:
    """Statistics of a clustered multipath channel between two arrays."""
    num_clusters: int
    rays_per_cluster: int
    angular_spread: float  # radians, std of the per-ray Laplacian offsets
    tx_geometry: ArrayGeometry
    rx_geometry: ArrayGeometry

    def __post_init__(self):
        if self.num_clusters < 1 or self.rays_per_cluster < 1:
            raise ValueError("cluster and ray counts must be >= 1")
        if not (0.0 < self.angular_spread < math.pi):
            raise ValueError("angular_spread must lie in (0, pi)")


@dataclass(frozen=True)
class TransceiverGeometry:
    """Relative placement of the co-located TX and RX arrays at the IAB node."""
    gap: float            # transceiver gap d, in wavelengths
    incline: float        # incline omega, radians
    tx_antennas: int
    rx_antennas: int

    def __post_init__(self):
        if self.gap <= 0:
            raise ValueError("gap must be positive")
        if not (0.0 < self.incline < math.pi):
            # tan/sin of the incline must be finite and nonzero
            raise ValueError("incline must lie strictly inside (0, pi)")
        if self.tx_antennas < 1 or self.rx_antennas < 1:
            raise ValueError("antenna counts must be >= 1")


@dataclass(frozen=True)
class ChannelSet:
    """One realization of the three links: backhaul, access, self-interference."""
    h_backhaul: np.ndarray  # N_IAB x N_gNB
    h_access: np.ndarray    # N_UE x N_IAB
    h_si: np.ndarray        # N_IAB x N_IAB


@dataclass(frozen=True)
class ClusterRays:
    """Sampled per-ray parameters; delays are kept but unused (narrowband)."""
    gains: np.ndarray   # complex, (C*R,)
    aoas: np.ndarray    # radians, (C*R,)
    aods: np.ndarray    # radians, (C*R,)
    delays: np.ndarray  # seconds-agnostic relative delays, (C*R,)


def array_response(theta: float, geometry: ArrayGeometry) -> np.ndarray:
    """Unit-norm ULA steering vector for angle theta."""
    n = geometry.num_antennas
    k = np.arange(n)
    phase = 2.0 * np.pi * geometry.spacing * np.sin(theta)
    return np.exp(1j * phase * k) / math.sqrt(n)


def sample_cluster_rays(params: ClusterChannelParams, rng: np.random.Generator) -> ClusterRays:
    """Draw ray gains, angles, and delays for one channel realization.

    Cluster centers are i.i.d. uniform on (-pi/2, pi/2); per-ray offsets are
    zero-mean Laplacian with standard deviation equal to the angular spread;
    gains are standard circularly-symmetric complex Gaussian.
    """
    c, r = params.num_clusters, params.rays_per_cluster
    total = c * r
    # Laplacian with std sigma has scale sigma/sqrt(2)
    scale = params.angular_spread / math.sqrt(2.0)
    centers_aoa = rng.uniform(-np.pi / 2, np.pi / 2, size=c)
    centers_aod = rng.uniform(-np.pi / 2, np.pi / 2, size=c)
    aoas = np.repeat(centers_aoa, r) + rng.laplace(0.0, scale, size=total)
    aods = np.repeat(centers_aod, r) + rng.laplace(0.0, scale, size=total)
    gains = (rng.standard_normal(total) + 1j * rng.standard_normal(total)) / math.sqrt(2.0)
    delays = rng.exponential(1.0, size=total)
    return ClusterRays(gains=gains, aoas=aoas, aods=aods, delays=delays)


def cluster_channel(rays: ClusterRays, params: ClusterChannelParams) -> np.ndarray:
    """Assemble the channel matrix from sampled rays (deterministic kernel)."""
    n_rx = params.rx_geometry.num_antennas
    n_tx = params.tx_geometry.num_antennas
    total = params.num_clusters * params.rays_per_cluster
    a_rx = np.stack([array_response(t, params.rx_geometry) for t in rays.aoas], axis=1)
    a_tx = np.stack([array_response(p, params.tx_geometry) for p in rays.aods], axis=1)
    h = (a_rx * rays.gains) @ a_tx.conj().T
    return math.sqrt(n_rx * n_tx / total) * h


def sample_cluster_channel(params: ClusterChannelParams, rng: np.random.Generator) -> np.ndarray:
    """One clustered-channel realization, shape (N_RX, N_TX)."""
    return cluster_channel(sample_cluster_rays(params, rng), params)


def element_distance(p: int, q: int, geom: TransceiverGeometry) -> float:
    """Distance (in wavelengths) between TX element p and RX element q.

    Element pitch is lambda/2 within each array. The incline enters through
    cos/sin ratios so omega = pi/2 is handled without overflow.
    """
    if p < 1 or q < 1:
        raise ValueError("antenna indices are 1-based")
    sin_w = math.sin(geom.incline)
    cos_w = math.cos(geom.incline)
    a = geom.gap * cos_w / sin_w + (q - 1) * 0.5
    b = geom.gap / sin_w + (p - 1) * 0.5
    return math.sqrt(a * a + b * b - 2.0 * a * b * cos_w)


def los_si_channel(geom: TransceiverGeometry) -> np.ndarray:
    """Deterministic near-field LOS SI matrix, entry (q,p) = e^{-i2πd_pq}/d_pq."""
    h = np.empty((geom.rx_antennas, geom.tx_antennas), dtype=complex)
    for q in range(1, geom.rx_antennas + 1):
        for p in range(1, geom.tx_antennas + 1):
            d = element_distance(p, q, geom)
            h[q - 1, p - 1] = np.exp(-2j * np.pi * d) / d
    return h


def si_channel(kappa_linear: float, h_los: np.ndarray, h_nlos: np.ndarray) -> np.ndarray:
    """Rician mixture of the near-field LOS and far-field NLOS components."""
    if kappa_linear < 0:
        raise ValueError("Rician factor must be nonnegative")
    if h_los.shape != h_nlos.shape:
        raise ValueError(f"shape mismatch: {h_los.shape} vs {h_nlos.shape}")
    w_los = math.sqrt(kappa_linear / (kappa_linear + 1.0))
    w_nlos = math.sqrt(1.0 / (kappa_linear + 1.0))
    return w_los * h_los + w_nlos * h_nlos


def draw_channel_set(cfg: SystemConfig, rng: np.random.Generator) -> ChannelSet:
    """Draw the (backhaul, access, SI) triple for one Monte Carlo trial.

    When cfg.normalize_si is set, the mixed SI matrix is rescaled to
    ||H_s||_F^2 = N_IAB^2 so the SI power knob alone controls SI strength.
    """
    spread = cfg.angular_spread_rad
    gnb = ArrayGeometry(cfg.n_gnb)
    iab = ArrayGeometry(cfg.n_iab)
    ue = ArrayGeometry(cfg.n_ue)

    h_b = sample_cluster_channel(
        ClusterChannelParams(cfg.num_clusters, cfg.rays_per_cluster, spread,
                             tx_geometry=gnb, rx_geometry=iab), rng)
    h_a = sample_cluster_channel(
        ClusterChannelParams(cfg.num_clusters, cfg.rays_per_cluster, spread,
                             tx_geometry=iab, rx_geometry=ue), rng)

    geom = TransceiverGeometry(gap=cfg.gap_wavelengths, incline=cfg.incline_rad,
                               tx_antennas=cfg.n_iab, rx_antennas=cfg.n_iab)
    h_nlos = sample_cluster_channel(
        ClusterChannelParams(cfg.num_clusters, cfg.rays_per_cluster, spread,
                             tx_geometry=iab, rx_geometry=iab), rng)
    h_s = si_channel(cfg.kappa, los_si_channel(geom), h_nlos)
    if cfg.normalize_si:
        h_s = h_s * (cfg.n_iab / np.linalg.norm(h_s, "fro"))
    return ChannelSet(h_backhaul=h_b, h_access=h_a, h_si=h_s)


def save_complex_matrix(path, matrix: np.ndarray) -> None:
    """Write a matrix as 'rows cols' header plus row-major 're im' lines."""
    m = np.asarray(matrix, dtype=complex)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{m.shape[0]} {m.shape[1]}\n")
        for value in m.ravel(order="C"):
            fh.write(f"{value.real:.17g} {value.imag:.17g}\n")


def load_complex_matrix(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        rows, cols = (int(tok) for tok in fh.readline().split())
        data = np.loadtxt(fh)
    data = np.atleast_2d(data)
    if data.shape[0] != rows * cols:
        raise ValueError(f"expected {rows * cols} entries, found {data.shape[0]}")
    return (data[:, 0] + 1j * data[:, 1]).reshape(rows, cols)
