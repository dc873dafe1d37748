"""Unitary OFDM modulation with cyclic prefix."""

from dataclasses import dataclass, field
from typing import List, Sequence, Union

import numpy as np

from mimo_jrc.config import SystemConfig
from mimo_jrc.frame import FrameGrid
from mimo_jrc.utils import FrameError, check_numpy


@dataclass
class TxBaseband:
    """Time-domain samples per TX chain.

    Args:
        samples: complex [chain, sample]
        sample_rate: Hz
        frame_markers: first sample of every frame in the stream
        frames: the grids the samples were modulated from, one per marker

    """

    samples: np.ndarray
    sample_rate: float
    frame_markers: List[int] = field(default_factory=lambda: [0])
    frames: List[FrameGrid] = field(default_factory=list)

    @property
    def n_chains(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @classmethod
    def concatenate(cls, basebands: Sequence["TxBaseband"], gap: int = 0) -> "TxBaseband":
        """Joins frames into one stream with ``gap`` zero samples after every frame."""
        assert len(basebands) > 0, "nothing to concatenate"
        n_chains = basebands[0].n_chains
        pieces, markers, frames, offset = [], [], [], 0
        for bb in basebands:
            assert bb.n_chains == n_chains, "all basebands need the same chain count"
            pieces += [bb.samples, np.zeros((n_chains, gap), dtype=complex)]
            markers += [offset + m for m in bb.frame_markers]
            frames += bb.frames
            offset += bb.n_samples + gap
        return cls(np.concatenate(pieces, axis=1), basebands[0].sample_rate, markers, frames)


def ofdm_modulate(grid: Union[FrameGrid, np.ndarray], cfg: SystemConfig) -> TxBaseband:
    """Inverse DFT of every symbol, cyclic prefix prepended, symbols concatenated per chain."""
    frame = grid if isinstance(grid, FrameGrid) else None
    values = frame.grid if frame is not None else check_numpy(grid, dtype=complex)
    assert values.shape[-1] == cfg.n_sc, "last grid axis must be the subcarriers"
    time = np.fft.ifft(values, axis=-1, norm="ortho")
    with_cp = np.concatenate([time[..., cfg.n_sc - cfg.n_cp :], time], axis=-1)
    samples = with_cp.reshape(values.shape[0], -1)
    return TxBaseband(samples, cfg.bandwidth, [0], [frame] if frame is not None else [])


def ofdm_demodulate(samples, cfg: SystemConfig, n_symbols: int = None, start: int = 0) -> np.ndarray:
    """Strips the cyclic prefixes and takes the unitary DFT of every symbol.

    Args:
        samples: complex [chain, sample] or a single chain, or any object with a ``samples`` attribute
        n_symbols: symbols to demodulate. Defaults to every whole symbol after ``start``
        start: first sample of the first symbol (start of its cyclic prefix)

    Returns:
        complex [chain, symbol, subcarrier]

    Raises:
        FrameError: fewer samples than the requested symbols

    """
    samples = check_numpy(getattr(samples, "samples", samples), dtype=complex)
    samples = np.atleast_2d(samples)
    length = cfg.symbol_length
    available = (samples.shape[1] - start) // length
    if n_symbols is None:
        n_symbols = available
    if n_symbols < 1 or n_symbols > available or start < 0:
        raise FrameError(f"stream holds {max(available, 0)} symbols after sample {start}, {n_symbols} requested")
    block = samples[:, start : start + n_symbols * length].reshape(samples.shape[0], n_symbols, length)
    return np.fft.fft(block[..., cfg.n_cp :], axis=-1, norm="ortho")
