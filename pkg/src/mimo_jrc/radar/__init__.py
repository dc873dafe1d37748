from .detection import (
    Detection,
    HalfPowerWidth,
    ca_cfar,
    calibrate_cfar_scale,
    cfar_mask,
    cfar_scale,
    cfar_threshold_factor,
    detect,
    global_peak,
    half_power_width,
    profile_width,
)
from .estimation import MeasurementMatrix, estimate_radar_channel, virtual_index
from .imaging import RangeAngleImage, noise_floor, range_angle_image, window
from .processor import RadarProcessor, RadarResult, recover_frames, split_frames
from .si_removal import SiEstimate, remove_si, update_si

__all__ = [
    "MeasurementMatrix",
    "estimate_radar_channel",
    "virtual_index",
    "SiEstimate",
    "update_si",
    "remove_si",
    "RangeAngleImage",
    "range_angle_image",
    "noise_floor",
    "window",
    "Detection",
    "HalfPowerWidth",
    "detect",
    "global_peak",
    "ca_cfar",
    "calibrate_cfar_scale",
    "cfar_mask",
    "cfar_scale",
    "cfar_threshold_factor",
    "half_power_width",
    "profile_width",
    "RadarProcessor",
    "RadarResult",
    "split_frames",
    "recover_frames",
]
