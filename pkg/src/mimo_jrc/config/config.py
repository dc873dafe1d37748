# MIMO JRC
# For license information, see LICENSE.TXT
"""Config."""

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import List, NamedTuple, Optional, Type, Union

import numpy as np
import yaml
from omegaconf import OmegaConf
from omegaconf.errors import OmegaConfBaseException
from scipy.constants import speed_of_light

from mimo_jrc.utils import ConfigError, get_logger

logger = get_logger(__name__)

MODULATIONS = ["BPSK", "QPSK", "QAM16"]
CODE_RATES = ["1/2", "3/4"]
WINDOWS = ["rectangular", "hann", "hamming", "blackman"]
PAPER_DEFAULTS = "paper-defaults"


def _validate_choices(cls):
    for key in cls.__dataclass_fields__.keys():
        atr = cls.__dataclass_fields__[key]
        if atr.init and "choices" in atr.metadata.keys():
            if getattr(cls, key) not in atr.metadata.get("choices"):
                raise ConfigError(
                    [
                        f"{key}: {getattr(cls, key)} is not a valid choice."
                        f" Please choose from on of the following: {atr.metadata['choices']}"
                    ]
                )


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _default_plan(n_sc: int):
    """802.11a style subcarrier plan scaled to ``n_sc``.

    Returns (data, pilot) FFT bin lists. For 64 subcarriers this is the
    48 data / 4 pilot (+-7, +-21) plan with the DC bin and 11 edge bins unused.

    """
    edge = n_sc * 26 // 64
    pilots_logical = [-(n_sc * 21 // 64), -(n_sc * 7 // 64), n_sc * 7 // 64, n_sc * 21 // 64]
    occupied = [k for k in range(-edge, edge + 1) if k != 0]
    data_logical = [k for k in occupied if k not in pilots_logical]
    return [k % n_sc for k in data_logical], [k % n_sc for k in pilots_logical]


@dataclass
class Mcs:
    """Modulation and coding scheme.

    Args:
        modulation (str): Constellation used for the payload. Choices are: [`BPSK`,`QPSK`,`QAM16`].

        code_rate (str): Convolutional code rate after puncturing. Choices are: [`1/2`,`3/4`].

    """

    modulation: str = field(
        default="QPSK",
        metadata={"help": "Constellation used for the payload", "choices": MODULATIONS},
    )
    code_rate: str = field(
        default="1/2",
        metadata={"help": "Convolutional code rate after puncturing", "choices": CODE_RATES},
    )

    def __post_init__(self):
        _validate_choices(self)

    @property
    def bits_per_symbol(self) -> int:
        return {"BPSK": 1, "QPSK": 2, "QAM16": 4}[self.modulation]

    @property
    def rate(self) -> Fraction:
        return Fraction(self.code_rate)

    @property
    def mcs_id(self) -> int:
        return MODULATIONS.index(self.modulation) * len(CODE_RATES) + CODE_RATES.index(self.code_rate)

    @classmethod
    def from_id(cls, mcs_id: int) -> "Mcs":
        if not 0 <= mcs_id < len(MODULATIONS) * len(CODE_RATES):
            raise ValueError(f"Unknown MCS id {mcs_id}")
        return cls(MODULATIONS[mcs_id // len(CODE_RATES)], CODE_RATES[mcs_id % len(CODE_RATES)])

    def coded_bits_per_symbol(self, n_data: int) -> int:
        return self.bits_per_symbol * n_data

    def data_bits_per_symbol(self, n_data: int) -> int:
        n_dbps = self.coded_bits_per_symbol(n_data) * self.rate
        assert n_dbps.denominator == 1, "coded bits per symbol incompatible with the code rate"
        return int(n_dbps)

    def __str__(self) -> str:
        return f"{self.modulation}-{self.code_rate}"


ALL_MCS = [Mcs.from_id(i) for i in range(len(MODULATIONS) * len(CODE_RATES))]


@dataclass
class SystemConfig:
    """Radio, waveform and imaging-grid configuration.

    Subcarrier sets are FFT bin indices in ``[0, n_sc)``. Leaving ``data_subcarriers`` and
    ``pilot_subcarriers`` empty selects the 802.11a style plan scaled to ``n_sc``; leaving
    ``guard_subcarriers`` empty makes it the complement of data and pilots.

    Args:
        f_c (float): Carrier frequency in Hz. Defaults to 24 GHz

        bandwidth (float): Baseband bandwidth, equal to the complex sample rate, in Hz. Defaults to 125 MHz

        n_sc (int): Number of subcarriers (FFT size). Must be a power of two

        n_cp (int): Cyclic prefix length in samples

        n_tx (int): Number of transmit chains

        n_rx (int): Number of receive chains

        d_tx (float): Spacing of the transmit elements in meters

        d_rx (float): Spacing of the receive elements in meters. ``n_tx * d_tx`` gives a uniform
                virtual array

        data_subcarriers (Optional[List[int]]): FFT bins carrying payload symbols, in mapping order

        pilot_subcarriers (Optional[List[int]]): FFT bins carrying pilots

        guard_subcarriers (Optional[List[int]]): FFT bins left empty

        pilot_values (List[float]): Known BPSK pilot values, one per pilot subcarrier

        mcs (Mcs): Default modulation and coding scheme for DATA frames

        n_fft_range (Optional[int]): Range FFT size. Defaults to 4 * n_sc

        n_fft_angle (Optional[int]): Angle FFT size. Defaults to 16 * n_tx * n_rx

        range_window (str): Window over subcarriers before the range transform.
                Choices are: [`rectangular`,`hann`,`hamming`,`blackman`].

        angle_window (str): Window over virtual elements before the angle transform.
                Choices are: [`rectangular`,`hann`,`hamming`,`blackman`].

        max_payload_symbols (int): Longest DATA payload, in OFDM symbols, a frame may carry

    """

    f_c: float = field(default=24e9, metadata={"help": "Carrier frequency in Hz"})
    bandwidth: float = field(
        default=125e6,
        metadata={"help": "Baseband bandwidth, equal to the complex sample rate, in Hz"},
    )
    n_sc: int = field(default=64, metadata={"help": "Number of subcarriers (FFT size). Must be a power of two"})
    n_cp: int = field(default=16, metadata={"help": "Cyclic prefix length in samples"})
    n_tx: int = field(default=4, metadata={"help": "Number of transmit chains"})
    n_rx: int = field(default=2, metadata={"help": "Number of receive chains"})
    d_tx: float = field(default=6.35e-3, metadata={"help": "Spacing of the transmit elements in meters"})
    d_rx: float = field(default=25.4e-3, metadata={"help": "Spacing of the receive elements in meters"})
    data_subcarriers: Optional[List[int]] = field(
        default=None, metadata={"help": "FFT bins carrying payload symbols, in mapping order"}
    )
    pilot_subcarriers: Optional[List[int]] = field(default=None, metadata={"help": "FFT bins carrying pilots"})
    guard_subcarriers: Optional[List[int]] = field(default=None, metadata={"help": "FFT bins left empty"})
    pilot_values: List[float] = field(
        default_factory=lambda: [1.0, 1.0, 1.0, -1.0],
        metadata={"help": "Known BPSK pilot values, one per pilot subcarrier"},
    )
    mcs: Mcs = field(default_factory=Mcs, metadata={"help": "Default modulation and coding scheme"})
    n_fft_range: Optional[int] = field(default=None, metadata={"help": "Range FFT size. Defaults to 4 * n_sc"})
    n_fft_angle: Optional[int] = field(
        default=None, metadata={"help": "Angle FFT size. Defaults to 16 * n_tx * n_rx"}
    )
    range_window: str = field(
        default="rectangular",
        metadata={"help": "Window over subcarriers before the range transform", "choices": WINDOWS},
    )
    angle_window: str = field(
        default="rectangular",
        metadata={"help": "Window over virtual elements before the angle transform", "choices": WINDOWS},
    )
    max_payload_symbols: int = field(
        default=2048,
        metadata={"help": "Longest DATA payload, in OFDM symbols, a frame may carry"},
    )

    def __post_init__(self):
        _validate_choices(self)
        if isinstance(self.mcs, dict):
            self.mcs = Mcs(**self.mcs)
        if _is_power_of_two(self.n_sc) and (self.data_subcarriers is None or self.pilot_subcarriers is None):
            data, pilots = _default_plan(self.n_sc)
            self.data_subcarriers = data if self.data_subcarriers is None else self.data_subcarriers
            self.pilot_subcarriers = pilots if self.pilot_subcarriers is None else self.pilot_subcarriers
        if self.guard_subcarriers is None and self.data_subcarriers is not None and self.pilot_subcarriers is not None:
            used = set(self.data_subcarriers) | set(self.pilot_subcarriers)
            self.guard_subcarriers = [k for k in range(self.n_sc) if k not in used]
        if self.n_fft_range is None:
            self.n_fft_range = 4 * self.n_sc
        if self.n_fft_angle is None:
            self.n_fft_angle = 16 * self.n_virtual
        errors = validate_config(self)
        if errors:
            raise ConfigError(errors)

    @property
    def wavelength(self) -> float:
        return speed_of_light / self.f_c

    @property
    def range_resolution(self) -> float:
        return speed_of_light / (2 * self.bandwidth)

    @property
    def max_range(self) -> float:
        return self.n_sc * self.range_resolution

    @property
    def n_virtual(self) -> int:
        return self.n_tx * self.n_rx

    @property
    def subcarrier_spacing(self) -> float:
        return self.bandwidth / self.n_sc

    @property
    def symbol_length(self) -> int:
        return self.n_sc + self.n_cp

    @property
    def occupied_subcarriers(self) -> List[int]:
        return sorted(set(self.data_subcarriers) | set(self.pilot_subcarriers))

    @property
    def subcarrier_frequencies(self) -> np.ndarray:
        """Signed baseband frequency of every FFT bin, in Hz."""
        return np.fft.fftfreq(self.n_sc, d=1 / self.bandwidth)

    @property
    def tx_positions(self) -> np.ndarray:
        return np.arange(self.n_tx) * self.d_tx

    @property
    def rx_positions(self) -> np.ndarray:
        return np.arange(self.n_rx) * self.d_rx

    @property
    def virtual_positions(self) -> np.ndarray:
        """Element position of every virtual channel, column (k, l) at index k * n_tx + l."""
        return (self.rx_positions[:, None] + self.tx_positions[None, :]).reshape(-1)

    def sample_times(self, n_samples: int) -> np.ndarray:
        return np.arange(n_samples) / self.bandwidth


@dataclass
class RadarConfig:
    """Radar processing configuration.

    Args:
        si_window (int): Depth of the self-interference measurement window (frames averaged)

        noise_region_start (float): Bins beyond this fraction of the maximum range form the noise floor
                region

        detection_method (str): Detector applied to every image. Choices are: [`global-peak`,`ca-cfar`].

        cfar_guard_range (int): CA-CFAR guard half-width along range, in image bins

        cfar_guard_angle (int): CA-CFAR guard half-width along angle, in image bins

        cfar_train_range (int): CA-CFAR training width along range, in image bins

        cfar_train_angle (int): CA-CFAR training width along angle, in image bins

        cfar_pfa (float): Design probability of false alarm per cell

        cfar_group_peaks (bool): Keep only local maxima among the cells above threshold

        cfar_scale (Optional[float]): CA-CFAR threshold factor. Calibrated on simulated noise images
                for `cfar_pfa` when left empty

        cfar_calibration_images (int): Noise images used to calibrate the CA-CFAR threshold factor

        preamble_threshold (float): Transmitted preamble magnitude below which a virtual channel
                cannot be estimated

        num_workers (int): Threads used to form images in ``RadarProcessor.process_many``

    """

    si_window: int = field(default=10, metadata={"help": "Depth of the self-interference measurement window"})
    noise_region_start: float = field(
        default=0.75,
        metadata={"help": "Bins beyond this fraction of the maximum range form the noise floor region"},
    )
    detection_method: str = field(
        default="ca-cfar",
        metadata={"help": "Detector applied to every image", "choices": ["global-peak", "ca-cfar"]},
    )
    cfar_guard_range: int = field(default=6, metadata={"help": "CA-CFAR guard half-width along range"})
    cfar_guard_angle: int = field(default=24, metadata={"help": "CA-CFAR guard half-width along angle"})
    cfar_train_range: int = field(default=8, metadata={"help": "CA-CFAR training width along range"})
    cfar_train_angle: int = field(default=16, metadata={"help": "CA-CFAR training width along angle"})
    cfar_pfa: float = field(default=1e-7, metadata={"help": "Design probability of false alarm per cell"})
    cfar_group_peaks: bool = field(
        default=True, metadata={"help": "Keep only local maxima among the cells above threshold"}
    )
    cfar_scale: Optional[float] = field(
        default=None,
        metadata={"help": "CA-CFAR threshold factor. Calibrated on simulated noise images for cfar_pfa when empty"},
    )
    cfar_calibration_images: int = field(
        default=200, metadata={"help": "Noise images used to calibrate the CA-CFAR threshold factor"}
    )
    preamble_threshold: float = field(
        default=1e-6,
        metadata={"help": "Transmitted preamble magnitude below which a virtual channel cannot be estimated"},
    )
    num_workers: int = field(default=1, metadata={"help": "Threads used to form images"})

    def __post_init__(self):
        _validate_choices(self)
        assert self.si_window > 0, "si_window should be greater than 0"
        assert 0 < self.noise_region_start < 1, "noise_region_start should be in (0, 1)"
        assert 0 < self.cfar_pfa < 1, "cfar_pfa should be in (0, 1)"
        assert self.cfar_train_range >= 0 and self.cfar_train_angle >= 0, "training widths cannot be negative"
        assert self.cfar_train_range + self.cfar_train_angle > 0, "CA-CFAR needs training cells"
        assert self.cfar_scale is None or self.cfar_scale > 0, "cfar_scale should be positive"
        assert self.cfar_calibration_images > 0, "cfar_calibration_images should be greater than 0"


@dataclass
class ReceiverConfig:
    """Communication receiver configuration.

    Args:
        detection_threshold (float): Delay-and-correlate metric threshold

        plateau_length (int): Samples the metric must stay above threshold to declare a frame

        correlation_window (int): Summation window W of the delay-and-correlate metric

        dc_block_length (int): Moving-average length of the DC-blocking filter in front of the detector

        timing_search (int): Half-width of the LTS cross-correlation search, in samples

        timing_backoff (int): Samples the FFT window is moved into the cyclic prefix

        estimator (str): Channel estimator used on DATA payload symbols. Choices are: [`LS`,`STA`].

        sta_alpha (float): Time averaging factor of the STA estimator

        sta_beta (int): Frequency smoothing half-width of the STA estimator

        erasure_floor (float): Subcarriers whose channel magnitude is below this fraction of the mean are
                erased

        snr_cap_db (float): Upper bound reported by the pilot SNR estimator

        cfo_guard (float): Fraction of the coarse CFO range beyond which an estimate is flagged out of range

        soft_decoding (bool): Feed max-log LLRs instead of hard decisions to the Viterbi decoder

        feedback_path (Optional[str]): Where NDP channel estimates are written. None disables feedback

    """

    detection_threshold: float = field(default=0.8, metadata={"help": "Delay-and-correlate metric threshold"})
    plateau_length: int = field(
        default=32, metadata={"help": "Samples the metric must stay above threshold to declare a frame"}
    )
    correlation_window: int = field(
        default=48, metadata={"help": "Summation window W of the delay-and-correlate metric"}
    )
    dc_block_length: int = field(default=64, metadata={"help": "Moving-average length of the DC-blocking filter"})
    timing_search: int = field(default=32, metadata={"help": "Half-width of the LTS cross-correlation search"})
    timing_backoff: int = field(
        default=1, metadata={"help": "Samples the FFT window is moved into the cyclic prefix"}
    )
    estimator: str = field(
        default="LS",
        metadata={"help": "Channel estimator used on DATA payload symbols", "choices": ["LS", "STA"]},
    )
    sta_alpha: float = field(default=2.0, metadata={"help": "Time averaging factor of the STA estimator"})
    sta_beta: int = field(default=2, metadata={"help": "Frequency smoothing half-width of the STA estimator"})
    erasure_floor: float = field(
        default=1e-3,
        metadata={"help": "Subcarriers whose channel magnitude is below this fraction of the mean are erased"},
    )
    snr_cap_db: float = field(default=60.0, metadata={"help": "Upper bound reported by the pilot SNR estimator"})
    cfo_guard: float = field(
        default=0.9,
        metadata={"help": "Fraction of the coarse CFO range beyond which an estimate is flagged out of range"},
    )
    soft_decoding: bool = field(
        default=False, metadata={"help": "Feed max-log LLRs instead of hard decisions to the Viterbi decoder"}
    )
    feedback_path: Optional[str] = field(
        default=None, metadata={"help": "Where NDP channel estimates are written. None disables feedback"}
    )

    def __post_init__(self):
        _validate_choices(self)
        assert 0 < self.detection_threshold < 1, "detection_threshold should be in (0, 1)"
        assert self.sta_alpha >= 1, "sta_alpha should be at least 1"
        assert self.sta_beta >= 0, "sta_beta cannot be negative"
        assert self.timing_backoff >= 0, "timing_backoff cannot be negative"


def validate_config(cfg: SystemConfig) -> List[str]:
    """Checks every SystemConfig invariant and returns one diagnostic per violation.

    An empty list means the config is valid.

    """
    errors = []
    if not _is_power_of_two(cfg.n_sc):
        errors.append(f"n_sc: {cfg.n_sc} is not a power of two")
    if cfg.n_cp < 0:
        errors.append("n_cp: cyclic prefix cannot be negative")
    elif cfg.n_cp >= cfg.n_sc:
        errors.append(f"n_cp: cyclic prefix too long ({cfg.n_cp} >= n_sc={cfg.n_sc})")
    for name in ("f_c", "bandwidth", "d_tx", "d_rx"):
        if getattr(cfg, name) <= 0:
            errors.append(f"{name}: must be positive")
    for name in ("n_tx", "n_rx"):
        if getattr(cfg, name) < 1:
            errors.append(f"{name}: at least one chain is required")
    if cfg.d_tx > 0 and not math.isclose(cfg.d_rx, cfg.n_tx * cfg.d_tx, rel_tol=1e-6):
        errors.append(f"d_rx: {cfg.d_rx} != n_tx * d_tx = {cfg.n_tx * cfg.d_tx}, the virtual array is not uniform")
    if cfg.data_subcarriers is None or cfg.pilot_subcarriers is None:
        errors.append("data_subcarriers/pilot_subcarriers: no subcarrier plan")
        return errors
    sets = {
        "data_subcarriers": list(cfg.data_subcarriers),
        "pilot_subcarriers": list(cfg.pilot_subcarriers),
        "guard_subcarriers": list(cfg.guard_subcarriers or []),
    }
    for name, indices in sets.items():
        outside = sorted(k for k in indices if not 0 <= k < cfg.n_sc)
        if outside:
            errors.append(f"{name}: indices {outside} outside [0, {cfg.n_sc})")
        if len(set(indices)) != len(indices):
            errors.append(f"{name}: repeated indices")
    names = list(sets)
    for i, first in enumerate(names):
        for second in names[i + 1 :]:
            common = sorted(set(sets[first]) & set(sets[second]))
            if common:
                errors.append(f"{first}/{second}: overlapping indices {common}")
    union = set().union(*map(set, sets.values()))
    missing = sorted(set(range(cfg.n_sc)) - union)
    if missing:
        errors.append(f"guard_subcarriers: indices {missing} belong to no set")
    if len(cfg.pilot_values) != len(cfg.pilot_subcarriers):
        errors.append("pilot_values: one value per pilot subcarrier is required")
    if any(abs(abs(v) - 1) > 1e-9 for v in cfg.pilot_values):
        errors.append("pilot_values: pilots must be +1 or -1")
    if len(cfg.pilot_subcarriers) == 0:
        errors.append("pilot_subcarriers: at least one pilot is required for phase tracking")
    n_data = len(cfg.data_subcarriers)
    if n_data < 48:
        errors.append(f"data_subcarriers: the header needs 48 data subcarriers, got {n_data}")
    if n_data % 4:
        errors.append("data_subcarriers: count must be a multiple of 4 for the rate 3/4 puncturing period")
    if cfg.n_fft_range is not None and cfg.n_fft_range < cfg.n_sc:
        errors.append("n_fft_range: must be at least n_sc")
    if cfg.n_fft_angle is not None and cfg.n_fft_angle < cfg.n_tx * cfg.n_rx:
        errors.append("n_fft_angle: must be at least the number of virtual channels")
    if cfg.max_payload_symbols < 1:
        errors.append("max_payload_symbols: must be positive")
    return errors


class RadarAxes(NamedTuple):
    """Physical coordinates of the image rows and columns.

    The angle axis keeps one entry per image column so that it indexes the image directly.
    Columns outside the visible region (``|sin| > 1``) are excluded by holding NaN there:
    ``angle_valid`` masks them, detectors never report them and the noise floor ignores them.

    """

    range_m: np.ndarray
    angle_deg: np.ndarray

    @property
    def angle_valid(self) -> np.ndarray:
        return ~np.isnan(self.angle_deg)


def derive_radar_axes(cfg: SystemConfig) -> RadarAxes:
    """Maps image bins to physical range (m) and angle (degrees).

    The angle axis is centered (fft-shifted): spatial frequency index k runs from
    ``-n_fft_angle/2`` to ``n_fft_angle/2 - 1``. Bins whose ``|sin|`` would exceed 1 are NaN.

    """
    range_m = np.arange(cfg.n_fft_range) * cfg.range_resolution * cfg.n_sc / cfg.n_fft_range
    k = np.arange(cfg.n_fft_angle) - cfg.n_fft_angle // 2
    sines = cfg.wavelength * k / (cfg.n_fft_angle * cfg.d_tx)
    visible = np.abs(sines) <= 1
    if not visible.all():
        logger.warning(
            f"{np.count_nonzero(~visible)} angle bins lie outside the visible region"
            f" (lambda / 2d_tx = {cfg.wavelength / (2 * cfg.d_tx):.3f})"
        )
    angle_deg = np.full(cfg.n_fft_angle, np.nan)
    angle_deg[visible] = np.degrees(np.arcsin(sines[visible]))
    return RadarAxes(range_m, angle_deg)


def _to_container(cfg):
    return OmegaConf.structured(cfg)


def _save(conf, path: Union[str, Path]) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as file:
        OmegaConf.save(config=conf, f=file)


def save_config(cfg, path: Union[str, Path], section: Optional[str] = None) -> None:
    """Writes a config dataclass as YAML. With ``section`` the document is ``{section: cfg}``."""
    conf = _to_container(cfg)
    if section is not None:
        conf = OmegaConf.create({section: conf})
    _save(conf, path)


def save_experiment(path: Union[str, Path], **sections) -> None:
    """Writes several configs as one experiment document keyed by section name."""
    _save(OmegaConf.create({name: _to_container(cfg) for name, cfg in sections.items()}), path)


def load_config(
    source: Union[str, Path, None],
    schema: Type = SystemConfig,
    section: Optional[str] = None,
):
    """Reads a YAML document into a validated config dataclass.

    Args:
        source: path of the YAML file, or ``"paper-defaults"``/None for the built-in defaults
        schema: the config dataclass to build
        section: top-level key holding this config. When the document does not contain it, the
            defaults of ``schema`` are returned unless ``section == "system"`` and the document is
            flat (no known sections), in which case the whole document is the system config.

    Raises:
        ConfigError: unreadable document, unknown keys, wrong types or violated invariants

    """
    if source is None or str(source) == PAPER_DEFAULTS:
        return schema()
    try:
        document = OmegaConf.load(source)
    except (OSError, OmegaConfBaseException, ValueError, yaml.YAMLError) as e:
        raise ConfigError([f"{source}: unreadable config ({e})"]) from e
    if section is not None:
        known_sections = {"system", "radar", "receiver", "scene"}
        if section in document:
            document = document[section]
        elif section == "system" and not known_sections & set(document.keys()):
            pass
        else:
            return schema()
    try:
        merged = OmegaConf.merge(OmegaConf.structured(schema), document)
        return OmegaConf.to_object(merged)
    except ConfigError:
        raise
    except (OmegaConfBaseException, AssertionError, TypeError, ValueError) as e:
        raise ConfigError([f"{source}: {e}"]) from e
