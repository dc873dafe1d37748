"""Frame detection, timing and carrier frequency offset estimation."""

import math
from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np
from scipy.signal import lfilter

from mimo_jrc.config import ReceiverConfig, SystemConfig
from mimo_jrc.frame import N_LTS, N_STS, sts_period, training_sequences
from mimo_jrc.utils import EPS, check_numpy, get_logger

logger = get_logger(__name__)


@dataclass
class SyncState:
    """Synchronisation of one detected frame.

    Args:
        detect_metric: delay-and-correlate metric around the detection
        frame_start: first sample of the metric plateau
        coarse_cfo: STS based estimate in Hz
        fine_cfo: residual estimated from the two LTS in Hz
        timing_offset: first sample of the frame after LTS fine timing
        cfo_out_of_range: the coarse estimate sits at the edge of its unambiguous range

    """

    detect_metric: np.ndarray
    frame_start: int
    coarse_cfo: float = 0.0
    fine_cfo: float = 0.0
    timing_offset: Optional[int] = None
    cfo_out_of_range: bool = False

    @property
    def cfo(self) -> float:
        return self.coarse_cfo + self.fine_cfo


def _moving_sum(x: np.ndarray, width: int) -> np.ndarray:
    s = np.concatenate([[0], np.cumsum(x)])
    return s[width:] - s[:-width]


def dc_block(stream, length: int = 64) -> np.ndarray:
    """Subtracts the causal moving average of ``length`` samples."""
    x = check_numpy(stream, dtype=complex)
    return x - lfilter(np.ones(length) / length, 1, x)


def delay_correlate(stream, lag: int = 16, window: int = 48) -> np.ndarray:
    """|sum r[n+k] conj(r[n+k+lag])| / sum |r[n+k+lag]|^2 over k < window.

    Positions where the normaliser vanishes get a metric of 0.

    """
    r = check_numpy(stream, dtype=complex)
    if r.size < lag + window:
        return np.zeros(0)
    corr = _moving_sum(r[:-lag] * np.conj(r[lag:]), window)
    energy = _moving_sum(np.abs(r[lag:]) ** 2, window)
    metric = np.zeros(energy.size)
    nonzero = energy > EPS
    metric[nonzero] = np.abs(corr[nonzero]) / energy[nonzero]
    return metric


def find_plateaus(metric: np.ndarray, threshold: float, plateau_length: int) -> List[int]:
    """Start of every run of at least ``plateau_length`` samples above ``threshold``."""
    above = np.concatenate([[False], metric > threshold, [False]])
    edges = np.flatnonzero(np.diff(above.astype(np.int8)))
    starts, stops = edges[0::2], edges[1::2]
    return [int(s) for s, e in zip(starts, stops) if e - s >= plateau_length]


def detect_frame(stream, cfg: SystemConfig, rcfg: Optional[ReceiverConfig] = None) -> Optional[SyncState]:
    """First frame of ``stream`` found by the delay-and-correlate detector, None when there is none."""
    rcfg = rcfg or ReceiverConfig()
    metric = delay_correlate(dc_block(stream, rcfg.dc_block_length), sts_period(cfg), rcfg.correlation_window)
    plateaus = find_plateaus(metric, rcfg.detection_threshold, rcfg.plateau_length)
    if not plateaus:
        return None
    return SyncState(detect_metric=metric, frame_start=plateaus[0])


def plateau_lead(rcfg: ReceiverConfig) -> int:
    """Samples by which the metric plateau starts ahead of the frame."""
    return math.ceil((1 - rcfg.detection_threshold) * rcfg.correlation_window)


def coarse_cfo(stream, start: int, cfg: SystemConfig, length: Optional[int] = None) -> float:
    """STS estimate angle(sum conj(r[n]) r[n+P]) B / (2 pi P) for the STS period P."""
    r = check_numpy(stream, dtype=complex)
    period = sts_period(cfg)
    length = length or (N_STS * cfg.symbol_length - 2 * period - cfg.n_cp)
    seg = r[start : start + length + period]
    return float(np.angle(np.sum(np.conj(seg[:-period]) * seg[period:])) * cfg.bandwidth / (2 * np.pi * period))


def lts_template(cfg: SystemConfig) -> np.ndarray:
    return np.fft.ifft(training_sequences(cfg)[1], norm="ortho")


def fine_timing(stream, sync: SyncState, cfg: SystemConfig, rcfg: Optional[ReceiverConfig] = None) -> int:
    """Frame start from the cross-correlation of both LTS bodies with the known LTS.

    ``stream`` should already be corrected for the coarse frequency offset.

    """
    rcfg = rcfg or ReceiverConfig()
    r = check_numpy(stream, dtype=complex)
    template = np.conj(lts_template(cfg))
    first_body = N_STS * cfg.symbol_length + cfg.n_cp
    nominal = sync.frame_start + plateau_lead(rcfg)
    candidates = np.arange(nominal - rcfg.timing_search, nominal + rcfg.timing_search + 1)
    last = (N_STS + N_LTS) * cfg.symbol_length
    candidates = candidates[(candidates >= 0) & (candidates + last <= r.size)]
    if candidates.size == 0:
        return nominal
    score = np.zeros(candidates.size)
    for i in range(N_LTS):
        idx = candidates[:, None] + first_body + i * cfg.symbol_length + np.arange(cfg.n_sc)[None, :]
        score += np.abs(r[idx] @ template)
    return int(candidates[np.argmax(score)])


def fine_cfo(stream, frame_start: int, cfg: SystemConfig) -> float:
    """Residual offset from the two LTS symbols, one OFDM symbol apart."""
    r = check_numpy(stream, dtype=complex)
    lag = cfg.symbol_length
    first = frame_start + N_STS * cfg.symbol_length + cfg.n_cp // 2
    a = r[first : first + lag - cfg.n_cp // 2]
    b = r[first + lag : first + 2 * lag - cfg.n_cp // 2]
    return float(np.angle(np.sum(np.conj(a) * b)) * cfg.bandwidth / (2 * np.pi * lag))


def derotate(stream, cfo: float, cfg: SystemConfig, first_sample: int = 0) -> np.ndarray:
    """Removes a frequency offset, time referenced to the start of the stream."""
    r = check_numpy(stream, dtype=complex)
    n = first_sample + np.arange(r.size)
    return r * np.exp(-2j * np.pi * cfo * n / cfg.bandwidth)


def estimate_cfo(stream, sync: SyncState, cfg: SystemConfig, rcfg: Optional[ReceiverConfig] = None) -> SyncState:
    """Coarse STS estimate, LTS fine timing and fine LTS estimate of a detected frame.

    Returns the completed synchronisation state. The coarse estimate is flagged when it lies
    beyond ``cfo_guard`` of its unambiguous range B / (2 P). Only the samples around the
    training symbols are touched.

    """
    rcfg = rcfg or ReceiverConfig()
    r = check_numpy(stream, dtype=complex)
    nominal = sync.frame_start + plateau_lead(rcfg)
    coarse = coarse_cfo(r, nominal, cfg)
    limit = cfg.bandwidth / (2 * sts_period(cfg))
    out_of_range = abs(coarse) > rcfg.cfo_guard * limit
    if out_of_range:
        logger.warning(f"Coarse CFO {coarse / 1e3:.1f} kHz is at the edge of the +-{limit / 1e3:.1f} kHz range")
    lo = max(nominal - rcfg.timing_search, 0)
    hi = min(nominal + rcfg.timing_search + (N_STS + N_LTS) * cfg.symbol_length, r.size)
    local = derotate(r[lo:hi], coarse, cfg, first_sample=lo)
    start = fine_timing(local, replace(sync, frame_start=sync.frame_start - lo), cfg, rcfg)
    fine = fine_cfo(local, start, cfg)
    return SyncState(
        detect_metric=sync.detect_metric,
        frame_start=sync.frame_start,
        coarse_cfo=coarse,
        fine_cfo=fine,
        timing_offset=lo + start,
        cfo_out_of_range=out_of_range,
    )
