"""Security impact of light injection into LiNbO3 modulators of decoy-state BB84 transmitters."""
from .channel import ChannelParams, ObservedStats, observe, published_channel, simulate_gain, simulate_qber, total_transmittance
from .core import Decibel, DomainError, IntensitySet, binary_entropy, db_to_transmittance, transmittance_to_db
from .countermeasures import (
    DefenseStack,
    MonitorPosition,
    minimum_defense_db,
    monitor_detects,
    power_at_modulator,
    residual_attack_strength,
)
from .decoy import (
    DecoyEstimates,
    KeyRateReport,
    delta_loss_to_k,
    estimate,
    estimate_e1,
    estimate_q1,
    evaluate_scenarios,
    eve_tap_fraction,
    key_rate,
    secure_key_rate,
)
from .modulator import (
    PUBLISHED_RECORDS,
    IrradiationSeries,
    ModulatorRecord,
    PhotorefractiveModel,
    RecoveryMode,
    extinction_penalty,
    fit_model,
    ingest_series,
    load_published_dataset,
    loss_increase,
    phase_remap_delta,
    recovery_excess_loss,
)
from .optimizer import OptimizationConfig, OptimizationResult, optimize_intensities

__version__ = "0.1.0"
