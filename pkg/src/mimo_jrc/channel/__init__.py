from .scene import PointTarget, Scene, SiLeakage, taper_exponent_for_fov
from .simulator import (
    CommBaseband,
    RxBaseband,
    noise_power_for_snr,
    simulate,
    simulate_comm,
    simulate_radar,
    steering_phase,
)

__all__ = [
    "PointTarget",
    "SiLeakage",
    "Scene",
    "taper_exponent_for_fov",
    "RxBaseband",
    "CommBaseband",
    "steering_phase",
    "simulate_radar",
    "simulate_comm",
    "simulate",
    "noise_power_for_snr",
]
