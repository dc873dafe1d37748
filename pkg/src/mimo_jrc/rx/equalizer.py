"""Channel estimation (LS and STA), zero-forcing equalisation and pilot SNR."""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from mimo_jrc.config import SystemConfig
from mimo_jrc.utils import EPS, check_numpy, pow2db


@dataclass
class ChannelEstimate:
    """Channel on the occupied subcarriers.

    Args:
        h: complex [subcarrier] effective channel, or [subcarrier, tx_chain] from an NDP
        kind: ``LS`` or ``STA``
        confidence: per-subcarrier magnitude relative to the mean, 0 off the occupied set

    """

    h: np.ndarray
    kind: str = "LS"
    confidence: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.confidence is None:
            mag = np.abs(self.h) if self.h.ndim == 1 else np.linalg.norm(self.h, axis=1)
            self.confidence = mag / max(mag[mag > 0].mean() if np.any(mag > 0) else 1.0, EPS)

    def effective(self, noise_var: Optional[float] = None) -> "ChannelEstimate":
        """Channel seen by a single steered stream: the TX columns summed.

        With ``noise_var``, the noise variance of the per-column estimates, every column is
        weighted by its signal share ``1 - noise_var / power`` clipped to [0, 1]. Preamble slots
        the precoder left silent then add next to no noise.

        """
        if self.h.ndim == 1:
            return self
        if noise_var is None:
            return ChannelEstimate(self.h.sum(axis=1), self.kind)
        rows = np.any(self.h != 0, axis=1)
        power = np.mean(np.abs(self.h[rows]) ** 2, axis=0)
        weights = np.clip(1 - noise_var / np.maximum(power, EPS), 0.0, 1.0)
        if not weights.any():
            weights = np.ones_like(weights)
        return ChannelEstimate(self.h @ weights, self.kind)


class Equalized(NamedTuple):
    data: np.ndarray
    pilots: np.ndarray
    erased: np.ndarray
    phase: np.ndarray


def ls_estimate(received, known, cfg: SystemConfig) -> ChannelEstimate:
    """Y / X on the occupied subcarriers, averaged over the received symbols.

    Args:
        received: complex [symbol, subcarrier] or [subcarrier]
        known: transmitted values, [subcarrier] or matching ``received``

    """
    y = np.atleast_2d(check_numpy(received, dtype=complex))
    x = np.broadcast_to(check_numpy(known, dtype=complex), y.shape)
    occupied = cfg.occupied_subcarriers
    h = np.zeros(cfg.n_sc, dtype=complex)
    h[occupied] = np.mean(y[:, occupied] / x[:, occupied], axis=0)
    return ChannelEstimate(h, "LS")


def mimo_ls_estimate(preamble, known, cfg: SystemConfig) -> ChannelEstimate:
    """Per-TX columns from the time-orthogonal MIMO preamble, slot l sounding chain l."""
    y = check_numpy(preamble, dtype=complex)
    assert y.shape == (cfg.n_tx, cfg.n_sc), "one preamble symbol per TX chain is required"
    occupied = cfg.occupied_subcarriers
    h = np.zeros((cfg.n_sc, cfg.n_tx), dtype=complex)
    h[occupied] = (y[:, occupied] / np.asarray(known)[occupied]).T
    return ChannelEstimate(h, "LS")


def lts_noise_variance(received, known, cfg: SystemConfig) -> float:
    """Noise variance per subcarrier from the difference of two identical training symbols.

    Args:
        received: complex [2, subcarrier], the two received LTS
        known: transmitted LTS values, [subcarrier]

    """
    y = check_numpy(received, dtype=complex)
    assert y.shape[0] == 2, "two training symbols are required"
    occupied = cfg.occupied_subcarriers
    diff = (y[0, occupied] - y[1, occupied]) / np.asarray(known)[occupied]
    return max(float(np.mean(np.abs(diff) ** 2) / 2), EPS)


def _neighbour_mean(values: np.ndarray, beta: int) -> np.ndarray:
    if beta == 0:
        return values
    padded = np.concatenate([np.zeros(beta), values, np.zeros(beta)])
    counts = np.concatenate([np.zeros(beta), np.ones(values.size), np.zeros(beta)])
    kernel = np.ones(2 * beta + 1)
    return np.convolve(padded, kernel, "valid") / np.convolve(counts, kernel, "valid")


def sta_update(
    prev: ChannelEstimate,
    received,
    decided,
    cfg: SystemConfig,
    alpha: float = 2.0,
    beta: int = 2,
) -> ChannelEstimate:
    """Spectral temporal averaging step.

    The decision-directed estimate Y / decided is averaged over up to ``beta`` occupied
    neighbours on each side (in frequency order) and blended into ``prev`` with weight
    1 / ``alpha``.

    """
    y = check_numpy(received, dtype=complex)
    d = check_numpy(decided, dtype=complex)
    occupied = sorted(cfg.occupied_subcarriers, key=lambda k: (k - cfg.n_sc) if k >= cfg.n_sc // 2 else k)
    assert np.all(np.abs(d[occupied]) > 0), "decided symbols must be nonzero"
    inst = y[occupied] / d[occupied]
    freq = _neighbour_mean(inst.real, beta) + 1j * _neighbour_mean(inst.imag, beta)
    h = prev.h.copy()
    h[occupied] = (1 - 1 / alpha) * prev.h[occupied] + freq / alpha
    return ChannelEstimate(h, "STA")


def common_phase(equalized_pilots, known_pilots) -> np.ndarray:
    """Mean pilot rotation of every symbol."""
    p = np.atleast_2d(equalized_pilots)
    return np.angle(np.sum(p * np.conj(np.asarray(known_pilots)), axis=-1))


def equalize(data_grid, est: ChannelEstimate, cfg: SystemConfig, erasure_floor: float = 1e-3) -> Equalized:
    """Zero-forcing equalisation with pilot common phase removal.

    Args:
        data_grid: complex [symbol, subcarrier]
        est: effective channel estimate

    Returns:
        equalized data [symbol, data subcarrier], equalized pilots [symbol, pilot], erased data
        subcarriers and the removed phase of every symbol. Erased values are 0, never NaN.

    """
    y = np.atleast_2d(check_numpy(data_grid, dtype=complex))
    h = est.effective().h
    occupied = np.asarray(cfg.occupied_subcarriers)
    floor = erasure_floor * np.abs(h[occupied]).mean()
    usable = np.abs(h) > max(floor, np.sqrt(EPS))
    z = np.zeros_like(y)
    z[:, usable] = y[:, usable] / h[usable]
    pilots = z[:, cfg.pilot_subcarriers]
    phase = common_phase(pilots, cfg.pilot_values)
    z *= np.exp(-1j * phase)[:, None]
    erased = ~usable[cfg.data_subcarriers]
    return Equalized(z[:, cfg.data_subcarriers], z[:, cfg.pilot_subcarriers], erased, phase)


def estimate_snr(pilots, known, cap_db: float = 60.0) -> float:
    """Pilot SNR mean |p|^2 / mean |p - known|^2 in dB, capped at ``cap_db``."""
    p = np.atleast_2d(check_numpy(pilots, dtype=complex))
    err = np.mean(np.abs(p - np.asarray(known)) ** 2)
    if err <= EPS:
        return cap_db
    return float(min(pow2db(np.mean(np.abs(p) ** 2) / err), cap_db))


def evm(equalized, reference) -> float:
    """RMS error vector magnitude relative to the RMS reference, as a fraction."""
    e = check_numpy(equalized, dtype=complex)
    r = check_numpy(reference, dtype=complex)
    return float(np.sqrt(np.mean(np.abs(e - r) ** 2) / max(np.mean(np.abs(r) ** 2), EPS)))
