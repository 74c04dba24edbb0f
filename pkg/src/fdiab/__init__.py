"""Hybrid analog/digital beamforming simulator for a full-duplex IAB link."""

from .analog import (
    InterferenceCovariance,
    NearSingularConstraint,
    ca_project,
    constrained_min_combiner,
    constrained_min_precoder,
    mmse_combiner_ue,
    regzf_precoder_gnb,
    rx_si_covariance,
    tx_si_covariance,
)
from .channel import (
    ArrayGeometry,
    ChannelSet,
    ClusterChannelParams,
    TransceiverGeometry,
    array_response,
    draw_channel_set,
    element_distance,
    los_si_channel,
    sample_cluster_channel,
    si_channel,
)
from .config import ConfigError, SystemConfig, load_config
from .digital import (
    DesignTrace,
    HybridBeamformerSet,
    RankDeficientRF,
    all_digital_design,
    digital_stage,
    half_duplex_evaluate,
    hybrid_design,
    svd_baseline_design,
)
from .harness import (
    TrialRecord,
    export_results,
    run_convergence_study,
    run_sweep,
)
from .metrics import (
    FlopReport,
    SingularNoiseCovariance,
    access_rate,
    backhaul_rate,
    effective_si_power,
    flop_model,
    upper_bound,
)

__version__ = "0.1.0"
