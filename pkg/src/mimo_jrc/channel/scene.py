"""Point-target scenes driving the channel simulator."""

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional

from mimo_jrc.utils import SceneError


@dataclass
class PointTarget:
    """A point scatterer.

    Args:
        range (float): Distance from the array in meters

        angle (float): Direction in degrees, 0 is broadside

        reflectivity (float): Linear amplitude gain, absorbs radar cross section and hardware gains

        velocity (float): Radial velocity in m/s, applied as ``range + velocity * Scene.time``

    """

    range: float = field(metadata={"help": "Distance from the array in meters"})
    angle: float = field(default=0.0, metadata={"help": "Direction in degrees, 0 is broadside"})
    reflectivity: float = field(default=1.0, metadata={"help": "Linear amplitude gain"})
    velocity: float = field(default=0.0, metadata={"help": "Radial velocity in m/s"})

    def __post_init__(self):
        if self.range <= 0:
            raise SceneError(f"target range must be positive, got {self.range}")
        if abs(self.angle) >= 90:
            raise SceneError(f"target angle must be within (-90, 90) degrees, got {self.angle}")
        if self.reflectivity <= 0:
            raise SceneError(f"reflectivity must be positive, got {self.reflectivity}")


@dataclass
class SiLeakage:
    """Direct TX to RX coupling, added on every virtual channel.

    Args:
        amplitude (float): Linear leakage amplitude

        delay (float): Leakage delay in samples, may be fractional

        phase_deg (float): Leakage phase in degrees

    """

    amplitude: float = field(default=0.0, metadata={"help": "Linear leakage amplitude"})
    delay: float = field(default=0.0, metadata={"help": "Leakage delay in samples"})
    phase_deg: float = field(default=0.0, metadata={"help": "Leakage phase in degrees"})

    def __post_init__(self):
        if self.amplitude < 0 or self.delay < 0:
            raise SceneError("leakage amplitude and delay cannot be negative")


@dataclass
class Scene:
    """Everything the simulator needs besides the transmitted samples.

    Args:
        targets (List[PointTarget]): Scatterers of interest

        clutter (List[PointTarget]): Static background scatterers

        si_leakage (SiLeakage): Direct TX to RX coupling of the radar receiver

        noise_power (float): Complex Gaussian noise power per sample

        radar_pl_exponent (float): Two-way path-loss exponent of radar returns

        comm_pl_exponent (float): One-way path-loss exponent of the communication link

        cfo (float): Carrier frequency offset of the communication receiver in Hz

        comm_angle (float): Direction of the communication receiver in degrees

        taper_exponent (float): Element pattern cos^q applied to the two-way radar amplitude.
                0 is omnidirectional

        time (float): Scene time in seconds, moves targets by their velocity

        rng_seed (Optional[int]): Seed of the noise and arrival-offset generator

    """

    targets: List[PointTarget] = field(default_factory=list, metadata={"help": "Scatterers of interest"})
    clutter: List[PointTarget] = field(default_factory=list, metadata={"help": "Static background scatterers"})
    si_leakage: SiLeakage = field(default_factory=SiLeakage, metadata={"help": "Direct TX to RX coupling"})
    noise_power: float = field(default=0.0, metadata={"help": "Complex Gaussian noise power per sample"})
    radar_pl_exponent: float = field(default=4.0, metadata={"help": "Two-way path-loss exponent"})
    comm_pl_exponent: float = field(default=2.0, metadata={"help": "One-way path-loss exponent"})
    cfo: float = field(default=0.0, metadata={"help": "Carrier frequency offset of the comm receiver in Hz"})
    comm_angle: float = field(default=0.0, metadata={"help": "Direction of the comm receiver in degrees"})
    taper_exponent: float = field(default=0.0, metadata={"help": "Element pattern exponent q of cos^q"})
    time: float = field(default=0.0, metadata={"help": "Scene time in seconds"})
    rng_seed: Optional[int] = field(default=None, metadata={"help": "Seed of the noise generator"})

    def __post_init__(self):
        self.targets = [t if isinstance(t, PointTarget) else PointTarget(**t) for t in self.targets]
        self.clutter = [t if isinstance(t, PointTarget) else PointTarget(**t) for t in self.clutter]
        if isinstance(self.si_leakage, dict):
            self.si_leakage = SiLeakage(**self.si_leakage)
        if self.noise_power < 0:
            raise SceneError("noise_power cannot be negative")
        if self.radar_pl_exponent <= 0 or self.comm_pl_exponent <= 0:
            raise SceneError("path-loss exponents must be positive")
        if self.taper_exponent < 0:
            raise SceneError("taper_exponent cannot be negative")
        if abs(self.comm_angle) >= 90:
            raise SceneError("comm_angle must be within (-90, 90) degrees")

    @property
    def scatterers(self) -> List[PointTarget]:
        return self.targets + self.clutter

    def static_part(self) -> "Scene":
        """The same scene without its targets, as seen during self-interference capture."""
        return replace(self, targets=[])

    def with_targets(self, targets: List[PointTarget]) -> "Scene":
        return replace(self, targets=list(targets))

    def with_seed(self, rng_seed: Optional[int]) -> "Scene":
        return replace(self, rng_seed=rng_seed)


def taper_exponent_for_fov(fov_deg: float, loss_db: float = 3.0) -> float:
    """Taper exponent q whose two-way power cos^(2q) drops by ``loss_db`` at +-fov/2."""
    assert 0 < fov_deg < 180, "field of view must be within (0, 180) degrees"
    return -loss_db / (20 * math.log10(math.cos(math.radians(fov_deg / 2))))
