"""Scripted radar scenarios: resolution, two-target imaging and background removal."""

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from mimo_jrc.channel import PointTarget, Scene, SiLeakage, simulate_radar
from mimo_jrc.config import RadarConfig, SystemConfig
from mimo_jrc.frame import FrameGrid, FrameKind
from mimo_jrc.radar import (
    Detection,
    HalfPowerWidth,
    RadarProcessor,
    RangeAngleImage,
    global_peak,
    half_power_width,
)
from mimo_jrc.tx import SteeringMatrix, TxBaseband, assemble_frame, ofdm_modulate
from mimo_jrc.utils import get_logger, ifnone, pow2db

logger = get_logger(__name__)

# 3 dB width of a uniform aperture in units of wavelength over aperture
HALF_POWER_BEAMWIDTH = 0.886


def expected_angle_resolution(cfg: SystemConfig) -> float:
    """Broadside 3 dB beamwidth of the rectangular-windowed virtual array, degrees."""
    return float(np.degrees(HALF_POWER_BEAMWIDTH * cfg.wavelength / (cfg.n_virtual * cfg.d_tx)))


def two_target_scene(
    angles: Sequence[float] = (-10.0, 10.0),
    range_m: float = 6.0,
    noise_power: float = 1e-4,
    leakage: float = 1.0,
) -> Scene:
    """Equal reflectors at a common range with direct leakage and receiver noise."""
    return Scene(
        targets=[PointTarget(range_m, a) for a in angles],
        si_leakage=SiLeakage(amplitude=leakage),
        noise_power=noise_power,
    )


def si_scene(
    range_m: float = 6.0,
    angle: float = 0.0,
    clutter_range: float = 3.0,
    clutter_angle: float = -30.0,
    excess_db: float = 40.0,
    noise_power: float = 1e-4,
    radar_pl_exponent: float = 4.0,
) -> Scene:
    """A unit reflector with direct leakage and one static scatterer, both ``excess_db`` stronger."""
    target_amplitude = range_m ** (-radar_pl_exponent / 2)
    strong = target_amplitude * 10 ** (excess_db / 20)
    clutter = PointTarget(clutter_range, clutter_angle, reflectivity=strong * clutter_range ** (radar_pl_exponent / 2))
    return Scene(
        targets=[PointTarget(range_m, angle)],
        clutter=[clutter],
        si_leakage=SiLeakage(amplitude=strong),
        noise_power=noise_power,
        radar_pl_exponent=radar_pl_exponent,
    )


def _ndp(cfg: SystemConfig) -> Tuple[FrameGrid, TxBaseband]:
    frame = assemble_frame(None, FrameKind.NDP, SteeringMatrix.identity(cfg), cfg)
    return frame, ofdm_modulate(frame, cfg)


def _nearest_bin(axis: np.ndarray, value: float) -> int:
    return int(np.nanargmin(np.abs(axis - value)))


def matches(image: RangeAngleImage, detection: Detection, target: PointTarget, tolerance: int = 1) -> bool:
    """The detection lies within ``tolerance`` range and angle bins of the target."""
    range_bin = _nearest_bin(image.range_m, target.range)
    angle_bin = _nearest_bin(image.angle_deg, target.angle)
    return abs(detection.range_bin - range_bin) <= tolerance and abs(detection.angle_bin - angle_bin) <= tolerance


def capture_background(
    processor: RadarProcessor,
    scene: Scene,
    cfg: SystemConfig,
    rng: np.random.Generator,
    n_frames: Optional[int] = None,
) -> None:
    """Fills the processor's self-interference window with frames of the static part of ``scene``."""
    frame, tx = _ndp(cfg)
    static = scene.static_part()
    processor.start_si_capture()
    for _ in range(ifnone(n_frames, processor.radar_config.si_window)):
        processor.process(simulate_radar(tx, static, cfg, rng), frame)
    processor.stop_si_capture()


@dataclass
class ResolutionReport:
    """3 dB widths of a single reflector.

    Args:
        detection: the global image peak
        range_width: width along range, m
        angle_width: width along angle, degrees
        expected_range: range resolution c / 2B
        expected_angle: broadside beamwidth of the virtual array

    """

    detection: Detection
    range_width: HalfPowerWidth
    angle_width: HalfPowerWidth
    expected_range: float
    expected_angle: float

    def within(self, tolerance: float = 0.3) -> bool:
        """Both widths are bounded and within ``tolerance`` (relative) of the expected values."""
        return (
            self.range_width.bounded
            and self.angle_width.bounded
            and abs(self.range_width.width / self.expected_range - 1) <= tolerance
            and abs(self.angle_width.width / self.expected_angle - 1) <= tolerance
        )


def run_resolution_report(
    cfg: SystemConfig,
    range_m: float = 6.0,
    angle: float = 0.0,
    noise_power: float = 0.0,
    seed: Optional[int] = None,
) -> ResolutionReport:
    """Images a single reflector and measures its 3 dB widths along range and angle."""
    frame, tx = _ndp(cfg)
    scene = Scene(targets=[PointTarget(range_m, angle)], noise_power=noise_power)
    processor = RadarProcessor(cfg, RadarConfig(detection_method="global-peak"))
    result = processor.process(simulate_radar(tx, scene, cfg, np.random.default_rng(seed)), frame)
    detection = result.detections[0]
    report = ResolutionReport(
        detection=detection,
        range_width=half_power_width(result.image, detection, "range"),
        angle_width=half_power_width(result.image, detection, "angle"),
        expected_range=cfg.range_resolution,
        expected_angle=expected_angle_resolution(cfg),
    )
    logger.info(
        f"3 dB widths: {report.range_width.width:.2f} m (expected {report.expected_range:.2f}),"
        f" {report.angle_width.width:.1f} deg (expected {report.expected_angle:.1f})"
    )
    return report


@dataclass
class TwoTargetReport:
    """Detections of a multi-target scene after background capture.

    Args:
        targets: the true reflectors
        detections: CA-CFAR detections, strongest first
        widths: (range, angle) 3 dB widths of every detection
        image: the background-free image
        resolved: every target is matched by its own detection

    """

    targets: List[PointTarget]
    detections: List[Detection]
    widths: List[Tuple[HalfPowerWidth, HalfPowerWidth]]
    image: RangeAngleImage = field(repr=False)
    resolved: bool

    @property
    def passed(self) -> bool:
        return self.resolved and len(self.detections) == len(self.targets)

    def peaks(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                dict(d.as_record(self.image.frame_index), range_width_m=rw.width, angle_width_deg=aw.width)
                for d, (rw, aw) in zip(self.detections, self.widths)
            ]
        )


def run_two_target_report(
    cfg: SystemConfig,
    scene: Optional[Scene] = None,
    radar_config: Optional[RadarConfig] = None,
    seed: Optional[int] = None,
) -> TwoTargetReport:
    """Captures the background of ``scene``, adds its targets and detects them with CA-CFAR.

    The default scene holds two reflectors at 6 m and +-10 degrees.

    """
    scene = ifnone(scene, two_target_scene())
    radar_config = replace(ifnone(radar_config, RadarConfig()), detection_method="ca-cfar")
    rng = np.random.default_rng(seed)
    processor = RadarProcessor(cfg, radar_config)
    capture_background(processor, scene, cfg, rng)
    frame, tx = _ndp(cfg)
    result = processor.process(simulate_radar(tx, scene, cfg, rng), frame)
    unmatched = list(result.detections)
    for target in scene.targets:
        hit = next((d for d in unmatched if matches(result.image, d, target)), None)
        if hit is not None:
            unmatched.remove(hit)
    resolved = len(result.detections) - len(unmatched) == len(scene.targets)
    report = TwoTargetReport(
        targets=list(scene.targets),
        detections=result.detections,
        widths=[
            (half_power_width(result.image, d, "range"), half_power_width(result.image, d, "angle"))
            for d in result.detections
        ],
        image=result.image,
        resolved=resolved,
    )
    if not report.passed:
        logger.warning(
            f"{len(report.detections)} detections for {len(report.targets)} targets"
            f"{'' if resolved else ', targets unresolved'}"
        )
    return report


def run_si_removal_report(
    cfg: SystemConfig,
    seeds: Sequence[int] = tuple(range(10)),
    scene: Optional[Scene] = None,
    radar_config: Optional[RadarConfig] = None,
) -> pd.DataFrame:
    """Background suppression with and without the self-interference estimate.

    For every seed the background window is filled from the static part of ``scene``, then a
    frame with the target is imaged twice: raw and background-free.

    Returns:
        one row per seed with ``target_peak_before``/``target_peak_after`` (the target is the
        global image peak), the power at the first clutter scatterer before and after removal
        in dB and their difference ``suppression_db``

    """
    scene = ifnone(scene, si_scene())
    assert scene.targets, "the scene needs a target"
    target = scene.targets[0]
    frame, tx = _ndp(cfg)
    rows = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        processor = RadarProcessor(cfg, ifnone(radar_config, RadarConfig()))
        capture_background(processor, scene, cfg, rng)
        rx = simulate_radar(tx, scene, cfg, rng)
        before, _ = processor.image(processor.measure(rx, frame))
        after = processor.process(rx, frame).image
        row = {
            "seed": seed,
            "target_peak_before": matches(before, global_peak(before)[0], target),
            "target_peak_after": matches(after, global_peak(after)[0], target),
        }
        if scene.clutter:
            clutter = scene.clutter[0]
            cell = (_nearest_bin(before.range_m, clutter.range), _nearest_bin(before.angle_deg, clutter.angle))
            row["clutter_before_db"] = float(pow2db(before.power[cell]))
            row["clutter_after_db"] = float(pow2db(after.power[cell]))
            row["suppression_db"] = row["clutter_before_db"] - row["clutter_after_db"]
        rows.append(row)
    df = pd.DataFrame(rows)
    logger.info(f"Target is the global peak after removal in {int(df['target_peak_after'].sum())}/{len(df)} runs")
    return df
