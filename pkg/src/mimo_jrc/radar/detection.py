"""Target detection on range-angle images and 3 dB width measurement."""

from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.ndimage import maximum_filter, uniform_filter

from mimo_jrc.config import RadarConfig, SystemConfig, derive_radar_axes
from mimo_jrc.radar.estimation import MeasurementMatrix
from mimo_jrc.radar.imaging import RangeAngleImage, range_angle_image
from mimo_jrc.utils import get_logger, ifnone, pow2db

logger = get_logger(__name__)

# ranks of the pooled noise ratios: fewest counted alarms, end of the tail fit
TAIL_RANKS = (10, 400)


@dataclass
class Detection:
    range_m: float
    angle_deg: float
    snr_db: float
    peak_power: float
    range_bin: int
    angle_bin: int

    def as_record(self, frame: int) -> dict:
        return {"frame": frame, "range_m": self.range_m, "angle_deg": self.angle_deg, "snr_db": self.snr_db}


class HalfPowerWidth(NamedTuple):
    width: float
    lower: float
    upper: float
    bounded: bool


def _detection(image: RangeAngleImage, i: int, j: int) -> Detection:
    peak = float(image.power[i, j])
    return Detection(
        range_m=float(image.range_m[i]),
        angle_deg=float(image.angle_deg[j]),
        snr_db=float(pow2db(peak / image.noise_floor)),
        peak_power=peak,
        range_bin=int(i),
        angle_bin=int(j),
    )


def _visible(image: RangeAngleImage) -> np.ndarray:
    return np.where(np.isnan(image.angle_deg)[None, :], 0.0, image.power)


def global_peak(image: RangeAngleImage) -> List[Detection]:
    i, j = np.unravel_index(np.argmax(_visible(image)), image.power.shape)
    return [_detection(image, i, j)]


def cfar_threshold_factor(n_train: int, pfa: float) -> float:
    """Cell-averaging scale factor for independent, exponentially distributed noise power."""
    return n_train * (pfa ** (-1 / n_train) - 1)


def training_average(
    power: np.ndarray, guard: Tuple[int, int] = (6, 24), train: Tuple[int, int] = (8, 16)
) -> Tuple[np.ndarray, int]:
    """Mean power of the training cells around every cell, and the number of training cells.

    Training cells form an annulus of ``train`` cells around a guard box of half-width
    ``guard`` (range, angle). Windows wrap around the image edges.

    """
    outer = tuple(2 * (g + t) + 1 for g, t in zip(guard, train))
    inner = tuple(2 * g + 1 for g in guard)
    n_outer, n_inner = np.prod(outer), np.prod(inner)
    total = uniform_filter(power, size=outer, mode="wrap") * n_outer
    guarded = uniform_filter(power, size=inner, mode="wrap") * n_inner
    n_train = int(n_outer - n_inner)
    return (total - guarded) / n_train, n_train


def _local_maxima(power: np.ndarray) -> np.ndarray:
    return power == maximum_filter(power, size=3, mode="wrap")


def cfar_mask(
    power: np.ndarray,
    guard: Tuple[int, int] = (6, 24),
    train: Tuple[int, int] = (8, 16),
    pfa: float = 1e-4,
    scale: Optional[float] = None,
) -> np.ndarray:
    """Cells exceeding ``scale`` times their training average.

    Without ``scale`` the closed-form factor for ``pfa`` is used.

    """
    noise, n_train = training_average(power, guard, train)
    scale = ifnone(scale, cfar_threshold_factor(n_train, pfa))
    return power > scale * noise


def calibrate_cfar_scale(
    cfg: SystemConfig,
    guard: Tuple[int, int] = (6, 24),
    train: Tuple[int, int] = (8, 16),
    pfa: float = 1e-4,
    group_peaks: bool = True,
    n_images: int = 200,
    seed: int = 0,
) -> float:
    """Scale factor giving ``pfa`` reported detections per visible cell on noise-only images.

    The zero-padded transforms correlate neighbouring cells and peak grouping keeps one cell
    of every cluster, so the closed-form factor misses its rate on real images. Here white
    noise over the occupied subcarriers and the virtual channels is imaged ``n_images`` times
    and the factor is read off the pooled ratios of candidate cells to their training average.
    Rates too small to be counted are extrapolated with an exponential fit to the upper tail
    of the ratios.

    """
    rng = np.random.default_rng(seed)
    axes = derive_radar_axes(cfg)
    occupied = np.asarray(cfg.occupied_subcarriers)
    shape = (occupied.size, cfg.n_virtual)
    ratios = []
    for _ in range(n_images):
        h = np.zeros((cfg.n_sc, cfg.n_virtual), dtype=complex)
        h[occupied] = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        power = _visible(range_angle_image(MeasurementMatrix(h), cfg, axes=axes))
        noise, _ = training_average(power, guard, train)
        candidates = _local_maxima(power) if group_peaks else np.ones(power.shape, dtype=bool)
        candidates &= axes.angle_valid[None, :]
        ratios.append(power[candidates] / noise[candidates])
    ratios = np.sort(np.concatenate(ratios))[::-1]
    expected = pfa * n_images * cfg.n_fft_range * np.count_nonzero(axes.angle_valid)
    lo, hi = TAIL_RANKS
    if expected >= lo:
        k = min(int(expected), ratios.size - 1)
        return float(ratios[k - 1 : k + 1].mean())
    hi = min(hi, ratios.size)
    slope, intercept = np.polyfit(ratios[lo:hi], np.log(np.arange(lo, hi) + 1), 1)
    return float((np.log(expected) - intercept) / slope)


_CALIBRATED: Dict[tuple, float] = {}


def cfar_scale(cfg: SystemConfig, radar_cfg: RadarConfig) -> float:
    """The configured CA-CFAR scale, or the calibration for ``cfg`` (computed once per setting)."""
    if radar_cfg.cfar_scale is not None:
        return radar_cfg.cfar_scale
    guard = (radar_cfg.cfar_guard_range, radar_cfg.cfar_guard_angle)
    train = (radar_cfg.cfar_train_range, radar_cfg.cfar_train_angle)
    key = (repr(cfg), guard, train, radar_cfg.cfar_pfa, radar_cfg.cfar_group_peaks, radar_cfg.cfar_calibration_images)
    if key not in _CALIBRATED:
        scale = calibrate_cfar_scale(
            cfg, guard, train, radar_cfg.cfar_pfa, radar_cfg.cfar_group_peaks, radar_cfg.cfar_calibration_images
        )
        logger.info(f"CA-CFAR scale {scale:.2f} calibrated for Pfa {radar_cfg.cfar_pfa:g}")
        _CALIBRATED[key] = scale
    return _CALIBRATED[key]


def ca_cfar(
    image: RangeAngleImage,
    guard: Tuple[int, int] = (6, 24),
    train: Tuple[int, int] = (8, 16),
    pfa: float = 1e-4,
    group_peaks: bool = True,
    scale: Optional[float] = None,
) -> List[Detection]:
    power = _visible(image)
    hits = cfar_mask(power, guard, train, pfa, scale)
    if group_peaks:
        hits &= _local_maxima(power)
    detections = [_detection(image, i, j) for i, j in zip(*np.nonzero(hits))]
    return sorted(detections, key=lambda d: d.snr_db, reverse=True)


def detect(
    image: RangeAngleImage,
    method: str = "global-peak",
    radar_cfg: Optional[RadarConfig] = None,
    cfar_scale: Optional[float] = None,
) -> List[Detection]:
    """Detections sorted by SNR, strongest first. An empty list is a valid result.

    ``cfar_scale`` overrides the threshold factor of CA-CFAR, otherwise the closed-form one
    for the configured Pfa is used.

    """
    if method == "global-peak":
        return global_peak(image)
    if method == "ca-cfar":
        radar_cfg = radar_cfg or RadarConfig()
        return ca_cfar(
            image,
            guard=(radar_cfg.cfar_guard_range, radar_cfg.cfar_guard_angle),
            train=(radar_cfg.cfar_train_range, radar_cfg.cfar_train_angle),
            pfa=radar_cfg.cfar_pfa,
            group_peaks=radar_cfg.cfar_group_peaks,
            scale=ifnone(cfar_scale, radar_cfg.cfar_scale),
        )
    raise ValueError(f"Unknown detection method {method}")


def _crossing(cut: np.ndarray, coords: np.ndarray, peak: int, step: int, level: float) -> Optional[float]:
    i = peak
    while 0 <= i + step < cut.size:
        nxt = i + step
        if cut[nxt] < level:
            frac = (cut[i] - level) / (cut[i] - cut[nxt])
            return float(coords[i] + frac * (coords[nxt] - coords[i]))
        i = nxt
    return None


def profile_width(cut, coords, peak: int) -> HalfPowerWidth:
    """Distance between the linearly interpolated half-power crossings around ``peak``."""
    cut = np.asarray(cut, dtype=float)
    coords = np.asarray(coords, dtype=float)
    level = cut[peak] / 2
    lower = _crossing(cut, coords, peak, -1, level)
    upper = _crossing(cut, coords, peak, +1, level)
    if lower is None or upper is None or np.isnan(lower) or np.isnan(upper):
        return HalfPowerWidth(np.inf, np.nan if lower is None else lower, np.nan if upper is None else upper, False)
    return HalfPowerWidth(abs(upper - lower), lower, upper, True)


def half_power_width(image: RangeAngleImage, detection: Detection, axis: str = "range") -> HalfPowerWidth:
    """3 dB width of a detection along ``axis`` (``range`` in meters or ``angle`` in degrees).

    A crossing beyond the image extent gives an unbounded result with infinite width.

    """
    if axis == "range":
        return profile_width(image.power[:, detection.angle_bin], image.range_m, detection.range_bin)
    if axis == "angle":
        return profile_width(image.power[detection.range_bin], image.angle_deg, detection.angle_bin)
    raise ValueError(f"Unknown axis {axis}")
