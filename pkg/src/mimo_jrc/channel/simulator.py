"""Parametric point-target channel: monostatic radar returns and a one-way comm link."""

from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np
from scipy.constants import speed_of_light

from mimo_jrc.channel.scene import Scene
from mimo_jrc.config import SystemConfig
from mimo_jrc.tx.ofdm import TxBaseband
from mimo_jrc.utils import SceneError, check_numpy, db2pow, get_logger

logger = get_logger(__name__)


@dataclass
class RxBaseband:
    """Received samples per RX chain, aligned with the stimulating transmission."""

    samples: np.ndarray
    sample_rate: float
    frame_markers: List[int] = field(default_factory=lambda: [0])


@dataclass
class CommBaseband:
    """Samples at the single-antenna communication receiver.

    Args:
        samples: complex samples
        sample_rate: Hz
        frame_markers: true first sample of every frame, arrival offset included
        offset: arrival offset in samples
        amplitude: one-way channel amplitude before steering

    """

    samples: np.ndarray
    sample_rate: float
    frame_markers: List[int] = field(default_factory=list)
    offset: int = 0
    amplitude: float = 1.0


def steering_phase(angle, position, wavelength: float):
    """Far-field phase exp(j 2 pi position sin(angle) / wavelength), angle in degrees."""
    return np.exp(2j * np.pi * np.asarray(position) * np.sin(np.radians(angle)) / wavelength)


def noise_power_for_snr(snr_db: float, amplitude: float = 1.0) -> float:
    """Per-sample noise power giving ``snr_db`` per occupied subcarrier for a unit-power grid."""
    return amplitude**2 / db2pow(snr_db)


def _make_rng(scene: Scene, rng: Optional[np.random.Generator]) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng(scene.rng_seed)


def _complex_noise(rng: np.random.Generator, power: float, shape) -> np.ndarray:
    return np.sqrt(power / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


class _SymbolBlocks:
    """Frequency-domain view of the OFDM symbols of a stream.

    Fractional delays become exact per-symbol phase ramps on these blocks, integer delays
    plain sample shifts, so a delay up to the cyclic prefix maps onto the demodulated grid
    as exp(-j 2 pi f tau) on every subcarrier.

    """

    def __init__(self, samples: np.ndarray, markers: List[int], n_symbols: List[int], cfg: SystemConfig):
        self.cfg = cfg
        self.n_samples = samples.shape[-1]
        length = cfg.symbol_length
        self.starts = np.concatenate(
            [m + length * np.arange(n) for m, n in zip(markers, n_symbols)]
        ).astype(int)
        index = self.starts[:, None] + cfg.n_cp + np.arange(cfg.n_sc)[None, :]
        self.spectra = np.fft.fft(samples[..., index], axis=-1, norm="ortho")
        covered = np.zeros(self.n_samples, dtype=bool)
        for s in self.starts:
            covered[s : s + length] = True
        if np.any(samples[..., ~covered]):
            logger.warning("Samples outside the OFDM symbols are ignored by the simulator")

    def delayed(self, spectra: np.ndarray, delay_samples: float) -> np.ndarray:
        """Time signal of ``spectra`` (one stream) delayed by ``delay_samples``."""
        cfg = self.cfg
        integer = int(np.floor(delay_samples))
        fraction = delay_samples - integer
        if fraction:
            ramp = np.exp(-2j * np.pi * np.fft.fftfreq(cfg.n_sc) * fraction)
            spectra = spectra * ramp
        body = np.fft.ifft(spectra, axis=-1, norm="ortho")
        symbols = np.concatenate([body[:, cfg.n_sc - cfg.n_cp :], body], axis=-1)
        out = np.zeros(self.n_samples, dtype=complex)
        index = self.starts[:, None] + np.arange(cfg.symbol_length)[None, :] + integer
        keep = index < self.n_samples
        out[index[keep]] = symbols[keep]
        return out


def _symbol_counts(tx: TxBaseband, cfg: SystemConfig) -> List[int]:
    if len(tx.frames) == len(tx.frame_markers):
        return [f.n_symbols for f in tx.frames]
    ends = list(tx.frame_markers[1:]) + [tx.n_samples]
    return [(end - m) // cfg.symbol_length for m, end in zip(tx.frame_markers, ends)]


def _check_range(r: float, cfg: SystemConfig) -> None:
    if not 0 < r < cfg.max_range:
        raise SceneError(f"scatterer at {r:.2f} m is outside (0, {cfg.max_range:.2f}) m and would alias")


def simulate_radar(
    tx: TxBaseband,
    scene: Scene,
    cfg: SystemConfig,
    rng: Optional[np.random.Generator] = None,
) -> RxBaseband:
    """Monostatic returns at every RX chain.

    Each scatterer contributes, on RX chain k, the sum over TX chains l of tx_l delayed by
    the round trip 2r/c, scaled by reflectivity r^(-exponent/2), the carrier phase
    exp(-j 2 pi f_c tau), the element taper cos^q(angle) and the steering phases of TX
    element l and RX element k. Leakage is added on every chain pair, then noise.

    Raises:
        SceneError: a scatterer at or beyond the maximum unambiguous range

    """
    x = np.atleast_2d(check_numpy(tx.samples, dtype=complex))
    assert x.shape[0] == cfg.n_tx, f"expected {cfg.n_tx} TX chains, got {x.shape[0]}"
    y = np.zeros((cfg.n_rx, x.shape[1]), dtype=complex)
    scatterers = scene.scatterers
    leak = scene.si_leakage
    if scatterers or leak.amplitude:
        blocks = _SymbolBlocks(x, tx.frame_markers, _symbol_counts(tx, cfg), cfg)
        for target in scatterers:
            r = target.range + target.velocity * scene.time
            _check_range(r, cfg)
            tau = 2 * r / speed_of_light
            amplitude = (
                target.reflectivity
                * r ** (-scene.radar_pl_exponent / 2)
                * np.exp(-2j * np.pi * cfg.f_c * tau)
                * np.cos(np.radians(target.angle)) ** scene.taper_exponent
            )
            tx_phase = steering_phase(target.angle, cfg.tx_positions, cfg.wavelength)
            rx_phase = steering_phase(target.angle, cfg.rx_positions, cfg.wavelength)
            combined = np.tensordot(tx_phase, blocks.spectra, axes=(0, 0))
            echo = blocks.delayed(combined, tau * cfg.bandwidth)
            y += amplitude * rx_phase[:, None] * echo[None, :]
        if leak.amplitude:
            coupling = leak.amplitude * np.exp(1j * np.radians(leak.phase_deg))
            y += coupling * blocks.delayed(blocks.spectra.sum(axis=0), leak.delay)[None, :]
    if scene.noise_power:
        y += _complex_noise(_make_rng(scene, rng), scene.noise_power, y.shape)
    return RxBaseband(y, tx.sample_rate, list(tx.frame_markers))


def simulate_comm(
    tx: TxBaseband,
    distance: float,
    scene: Scene,
    cfg: SystemConfig,
    rng: Optional[np.random.Generator] = None,
    max_offset: Optional[int] = None,
    offset: Optional[int] = None,
    trailing: Optional[int] = None,
) -> CommBaseband:
    """One-way line-of-sight link to a single-antenna receiver at ``scene.comm_angle``.

    The transmitted chains are combined with their steering phases, scaled by
    distance^(-exponent/2) and the carrier phase, shifted by a random integer arrival offset,
    rotated by the carrier frequency offset and buried in noise before and after the frames.

    """
    if distance <= 0:
        raise SceneError(f"comm distance must be positive, got {distance}")
    rng = _make_rng(scene, rng)
    x = np.atleast_2d(check_numpy(tx.samples, dtype=complex))
    assert x.shape[0] == cfg.n_tx, f"expected {cfg.n_tx} TX chains, got {x.shape[0]}"
    max_offset = 4 * cfg.symbol_length if max_offset is None else max_offset
    offset = int(rng.integers(0, max_offset + 1)) if offset is None else offset
    trailing = 2 * cfg.symbol_length if trailing is None else trailing
    amplitude = distance ** (-scene.comm_pl_exponent / 2)
    phase = steering_phase(scene.comm_angle, cfg.tx_positions, cfg.wavelength)
    carrier = np.exp(-2j * np.pi * cfg.f_c * distance / speed_of_light)
    signal = amplitude * carrier * (phase @ x)
    y = np.concatenate([np.zeros(offset, dtype=complex), signal, np.zeros(trailing, dtype=complex)])
    if scene.cfo:
        y *= np.exp(2j * np.pi * scene.cfo * cfg.sample_times(y.size))
    if scene.noise_power:
        y += _complex_noise(rng, scene.noise_power, y.shape)
    return CommBaseband(
        samples=y,
        sample_rate=tx.sample_rate,
        frame_markers=[offset + m for m in tx.frame_markers],
        offset=offset,
        amplitude=amplitude,
    )


def simulate(
    tx: TxBaseband,
    scene: Scene,
    cfg: SystemConfig,
    link: str = "radar",
    distance: Optional[float] = None,
    rng: Optional[np.random.Generator] = None,
) -> Union[RxBaseband, CommBaseband]:
    if link == "radar":
        return simulate_radar(tx, scene, cfg, rng)
    if link == "comm":
        assert distance is not None, "the comm link needs a distance"
        return simulate_comm(tx, distance, scene, cfg, rng)
    raise ValueError(f"Unknown link {link}")
