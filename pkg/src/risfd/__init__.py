"""Channel estimation for RIS-assisted full-duplex MIMO under hardware impairments."""

__version__ = "0.1.0"

from .channels import (
    ChannelSet,
    Geometry,
    SystemDims,
    channel_matrix,
    load_channels,
    path_gain,
    sample_channels,
    save_channels,
    stack_channels,
)
from .config import ConfigError, canonical_echo, config_hash, load_config, parse_config
from .error_stats import (
    NormalMatrix,
    TrainingErrorStats,
    aggregate_error_stats,
    error_correlation,
    error_mean,
    normal_equations,
)
from .estimators import (
    EstimateResult,
    expected_hi_estimate,
    hi_estimate,
    hi_mse,
    ls_estimate,
    ls_mse,
)
from .impairments import (
    ImpairmentProfile,
    bessel_ratio,
    received_covariance,
    receiver_distortion_cov,
    sample_phase_offsets,
    sample_tx_distortion,
)
from .simulator import (
    BiasReport,
    SimConfig,
    SweepResult,
    TrialRecord,
    measure_estimator_bias,
    nmse,
    run_sweep,
    run_trial,
    simulate_training_rx,
)
from .training import (
    TrainingPlan,
    assemble_regressor,
    build_plan,
    equalize_energy,
    plan_fingerprint,
    plan_summary,
    ris_phase_schedule,
    training_energy,
    ue_pilot_basis,
    verify_orthogonality,
)

__all__ = [name for name in dir() if not name.startswith("_")]
