from .config import (
    ALL_MCS,
    PAPER_DEFAULTS,
    Mcs,
    RadarAxes,
    RadarConfig,
    ReceiverConfig,
    SystemConfig,
    _validate_choices,
    derive_radar_axes,
    load_config,
    save_config,
    save_experiment,
    validate_config,
)

__all__ = [
    "SystemConfig",
    "RadarConfig",
    "ReceiverConfig",
    "Mcs",
    "ALL_MCS",
    "RadarAxes",
    "PAPER_DEFAULTS",
    "derive_radar_axes",
    "validate_config",
    "load_config",
    "save_config",
    "save_experiment",
    "_validate_choices",
]
