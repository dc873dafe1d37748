"""Range-angle imaging with two FFTs."""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import get_window

from mimo_jrc.config import RadarAxes, SystemConfig, derive_radar_axes
from mimo_jrc.radar.estimation import MeasurementMatrix
from mimo_jrc.utils import EPS, pow2db

_SCIPY_WINDOWS = {"rectangular": "boxcar", "hann": "hann", "hamming": "hamming", "blackman": "blackman"}


@dataclass
class RangeAngleImage:
    """Power over range (rows) and angle (columns).

    Args:
        power: linear power [n_fft_range, n_fft_angle]
        range_m: range of every row in meters
        angle_deg: angle of every column in degrees, NaN outside the visible region
        noise_floor: median power of the far range bins
        frame_index: index of the frame the image came from

    """

    power: np.ndarray
    range_m: np.ndarray
    angle_deg: np.ndarray
    noise_floor: float
    frame_index: int = 0

    @property
    def power_db(self) -> np.ndarray:
        return pow2db(self.power)

    @property
    def snr_db(self) -> np.ndarray:
        return pow2db(self.power / self.noise_floor)


def window(name: str, n: int) -> np.ndarray:
    return get_window(_SCIPY_WINDOWS[name], n, fftbins=False)


def _range_taper(cfg: SystemConfig) -> np.ndarray:
    # window over the occupied span of the centred band
    occupied = np.fft.fftshift(np.isin(np.arange(cfg.n_sc), cfg.occupied_subcarriers))
    span = np.flatnonzero(occupied)
    taper = np.zeros(cfg.n_sc)
    taper[span[0] : span[-1] + 1] = window(cfg.range_window, span[-1] - span[0] + 1)
    return taper


def noise_floor(power: np.ndarray, axes: RadarAxes, max_range: float, region_start: float = 0.75) -> float:
    """Median power over every bin farther than ``region_start * max_range``."""
    far = axes.range_m > region_start * max_range
    return max(float(np.median(power[far][:, axes.angle_valid])), EPS)


def range_angle_image(
    H: MeasurementMatrix,
    cfg: SystemConfig,
    noise_region_start: float = 0.75,
    axes: Optional[RadarAxes] = None,
) -> RangeAngleImage:
    """Windows, zero-pads and transforms a measurement matrix.

    Subcarriers are put in increasing frequency order and inverse transformed into range,
    virtual elements are transformed into spatial frequency and centred. Both transforms
    are unitary, so without windows and padding the image energy equals that of ``H``.

    """
    axes = axes or derive_radar_axes(cfg)
    h = np.fft.fftshift(H.h, axes=0)
    h = h * _range_taper(cfg)[:, None] * window(cfg.angle_window, cfg.n_virtual)[None, :]
    profile = np.fft.ifft(h, n=cfg.n_fft_range, axis=0, norm="ortho")
    spectrum = np.fft.fftshift(np.fft.fft(profile, n=cfg.n_fft_angle, axis=1, norm="ortho"), axes=1)
    power = np.abs(spectrum) ** 2
    return RangeAngleImage(
        power=power,
        range_m=axes.range_m,
        angle_deg=axes.angle_deg,
        noise_floor=noise_floor(power, axes, cfg.max_range, noise_region_start),
        frame_index=H.frame_index,
    )
