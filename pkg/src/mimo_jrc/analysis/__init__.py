from .path_loss import PathLossFit, fit_path_loss, path_loss_model
from .reports import (
    ResolutionReport,
    TwoTargetReport,
    capture_background,
    expected_angle_resolution,
    matches,
    run_resolution_report,
    run_si_removal_report,
    run_two_target_report,
    si_scene,
    two_target_scene,
)
from .sweeps import (
    SweepRecord,
    comm_snr,
    field_of_view,
    radar_peak,
    records_frame,
    run_angle_sweep,
    run_comm_distance_sweep,
    run_distance_sweep,
)

__all__ = [
    "PathLossFit",
    "fit_path_loss",
    "path_loss_model",
    "SweepRecord",
    "records_frame",
    "radar_peak",
    "comm_snr",
    "field_of_view",
    "run_distance_sweep",
    "run_angle_sweep",
    "run_comm_distance_sweep",
    "ResolutionReport",
    "TwoTargetReport",
    "expected_angle_resolution",
    "two_target_scene",
    "si_scene",
    "capture_background",
    "matches",
    "run_resolution_report",
    "run_two_target_report",
    "run_si_removal_report",
]
