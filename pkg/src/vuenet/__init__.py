"""V2V link simulator with tail-aware power control and federated tail fitting."""

from .config import (
    ConfigError,
    ExperimentPreset,
    PRESETS,
    config_from_dict,
    config_to_dict,
    default_config,
    dump_config,
    load_config,
)
from .control import ControlError, ControlParams, Policy, QueueState, decide, water_filling
from .federated import (
    CommsLedger,
    FitResult,
    GlobalModel,
    LocalModel,
    MessageLayout,
    NoDataError,
    aggregate,
    comms_comparison,
    federated_round,
    init_model,
    local_svrg_epoch,
    run_centralized,
    run_federated,
)
from .gpd import GpdError, GpdParams, mean_excess, nll, nll_grad, pdf, project, sample, survival
from .mobility import GridSpec, ZoneMap, assign_zones, init_fleet, step_mobility
from .radio import RadioConfig, channel_gain, path_loss_matrix, rate
from .simulator import (
    MetricsReport,
    SimConfig,
    SimTraces,
    SimulationError,
    compute_metrics,
    run,
    sample_block_maxima,
)

__version__ = "0.1.0"

__all__ = [
    "CommsLedger",
    "ConfigError",
    "ControlError",
    "ControlParams",
    "ExperimentPreset",
    "FitResult",
    "GlobalModel",
    "GpdError",
    "GpdParams",
    "GridSpec",
    "LocalModel",
    "MessageLayout",
    "MetricsReport",
    "NoDataError",
    "PRESETS",
    "Policy",
    "QueueState",
    "RadioConfig",
    "SimConfig",
    "SimTraces",
    "SimulationError",
    "ZoneMap",
    "aggregate",
    "assign_zones",
    "channel_gain",
    "comms_comparison",
    "compute_metrics",
    "config_from_dict",
    "config_to_dict",
    "decide",
    "default_config",
    "dump_config",
    "federated_round",
    "init_fleet",
    "init_model",
    "load_config",
    "local_svrg_epoch",
    "mean_excess",
    "nll",
    "nll_grad",
    "path_loss_matrix",
    "pdf",
    "project",
    "rate",
    "run",
    "run_centralized",
    "run_federated",
    "sample",
    "sample_block_maxima",
    "step_mobility",
    "survival",
    "water_filling",
]
