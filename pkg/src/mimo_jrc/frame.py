"""Frame layout, training sequences and the frequency-domain frame grid."""

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from mimo_jrc.coding.scrambler import prbs
from mimo_jrc.config import Mcs, SystemConfig

N_STS = 2
N_LTS = 2
N_HEADER = 1

# 802.11a training sequences over logical subcarriers -26..26
_LTS_NEG = [1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1]
_LTS_POS = [1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1]
_STS_POINTS = {
    -24: 1 + 1j,
    -20: -1 - 1j,
    -16: 1 + 1j,
    -12: -1 - 1j,
    -8: -1 - 1j,
    -4: 1 + 1j,
    4: -1 - 1j,
    8: -1 - 1j,
    12: 1 + 1j,
    16: 1 + 1j,
    20: 1 + 1j,
    24: 1 + 1j,
}


class FrameKind(Enum):
    NDP = 0
    DATA = 1


class Segment(NamedTuple):
    name: str
    start: int
    n_symbols: int

    @property
    def stop(self) -> int:
        return self.start + self.n_symbols

    @property
    def symbols(self) -> slice:
        return slice(self.start, self.stop)


def frame_layout(kind: FrameKind, n_data: int, cfg: SystemConfig) -> List[Segment]:
    """Ordered frame segments with their OFDM symbol offsets."""
    if kind == FrameKind.NDP:
        assert n_data == 0, "NDP frames carry no payload symbols"
    else:
        assert n_data >= 1, "DATA frames carry at least one payload symbol"
    counts = [("sts", N_STS), ("lts", N_LTS), ("header", N_HEADER), ("mimo_preamble", cfg.n_tx)]
    if n_data:
        counts.append(("data", n_data))
    layout, start = [], 0
    for name, n in counts:
        layout.append(Segment(name, start, n))
        start += n
    return layout


def _logical(bins, n_sc: int) -> np.ndarray:
    bins = np.asarray(bins)
    return np.where(bins < n_sc // 2, bins, bins - n_sc)


def _is_default_plan(cfg: SystemConfig) -> bool:
    return cfg.n_sc == 64 and set(_logical(cfg.occupied_subcarriers, 64)) == set(range(-26, 27)) - {0}


@lru_cache(maxsize=16)
def _training_sequences(n_sc: int, occupied: Tuple[int, ...], default_plan: bool):
    sts = np.zeros(n_sc, dtype=complex)
    lts = np.zeros(n_sc, dtype=complex)
    if default_plan:
        for k, value in zip(range(-26, 0), _LTS_NEG):
            lts[k % n_sc] = value
        for k, value in zip(range(1, 27), _LTS_POS):
            lts[k % n_sc] = value
        for k, value in _STS_POINTS.items():
            sts[k % n_sc] = value * np.sqrt(13 / 6)
    else:
        occupied = np.asarray(occupied)
        lts[occupied] = 1 - 2.0 * prbs(0x7F, occupied.size)
        sts_bins = occupied[_logical(occupied, n_sc) % 4 == 0]
        bits = prbs(0x5D, 2 * sts_bins.size).reshape(-1, 2)
        points = (2.0 * bits[:, 0] - 1) + 1j * (2.0 * bits[:, 1] - 1)
        # same total energy as the LTS
        sts[sts_bins] = points * np.sqrt(occupied.size / (2 * sts_bins.size))
    sts.flags.writeable = False
    lts.flags.writeable = False
    return sts, lts


def training_sequences(cfg: SystemConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Frequency-domain STS and LTS in FFT bin order.

    The 64-subcarrier 802.11a plan uses the standard tables. Other plans get a PRBS derived
    BPSK LTS on every occupied subcarrier and a QPSK STS on every fourth logical subcarrier,
    which keeps the STS periodic with period ``n_sc / 4`` samples.

    """
    return _training_sequences(cfg.n_sc, tuple(cfg.occupied_subcarriers), _is_default_plan(cfg))


def sts_period(cfg: SystemConfig) -> int:
    return cfg.n_sc // 4


@dataclass
class FrameGrid:
    """Frequency-domain content of one frame.

    Args:
        kind: NDP or DATA
        layout: ordered segments
        grid: complex values indexed [tx_chain, ofdm_symbol, subcarrier]
        mcs: payload modulation and coding, None for NDP frames
        payload_len: payload length in bytes
        steering_source: ``identity`` or ``feedback-file``

    """

    kind: FrameKind
    layout: List[Segment]
    grid: np.ndarray
    mcs: Optional[Mcs] = None
    payload_len: int = 0
    steering_source: str = field(default="identity")

    def __post_init__(self):
        n_symbols = self.layout[-1].stop
        assert self.grid.ndim == 3 and self.grid.shape[1] == n_symbols, "grid does not match the layout"

    def segment(self, name: str) -> Segment:
        for seg in self.layout:
            if seg.name == name:
                return seg
        raise KeyError(f"{self.kind.name} frame has no {name} segment")

    @property
    def n_tx(self) -> int:
        return self.grid.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.grid.shape[1]

    @property
    def n_data(self) -> int:
        return self.segment("data").n_symbols if self.kind == FrameKind.DATA else 0

    def preamble_symbol(self, slot: int) -> np.ndarray:
        """Known transmitted values of MIMO-preamble slot ``slot`` on its own chain."""
        return self.grid[slot, self.segment("mimo_preamble").start + slot]
