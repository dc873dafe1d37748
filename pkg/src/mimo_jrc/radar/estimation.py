"""Unstructured radar channel estimation from the MIMO preamble."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from mimo_jrc.config import SystemConfig
from mimo_jrc.frame import FrameGrid, FrameKind
from mimo_jrc.utils import check_numpy, get_logger

logger = get_logger(__name__)


@dataclass
class MeasurementMatrix:
    """Radar channel of every virtual TX/RX pair.

    Args:
        h: complex [subcarrier, virtual channel], column ``k * n_tx + l`` for RX k and TX l
        valid: virtual channels whose preamble could be divided out
        frame_index: index of the frame the estimate came from

    """

    h: np.ndarray
    valid: Optional[np.ndarray] = None
    frame_index: int = 0

    def __post_init__(self):
        if self.valid is None:
            self.valid = np.ones(self.h.shape[1], dtype=bool)

    @property
    def n_virtual(self) -> int:
        return self.h.shape[1]


def virtual_index(rx: int, tx: int, n_tx: int) -> int:
    return rx * n_tx + tx


def estimate_radar_channel(
    grid,
    frame: FrameGrid,
    cfg: SystemConfig,
    threshold: float = 1e-6,
    frame_index: int = 0,
) -> MeasurementMatrix:
    """Divides the received MIMO-preamble slots by the transmitted ones.

    Slot l carries only chain l, so Y_k[slot l] / X_l[slot l] is the channel of the virtual
    pair (k, l). Unoccupied subcarriers stay zero. For precoded DATA frames a chain whose
    weight vanishes on an occupied subcarrier cannot be estimated: its column is zeroed and
    marked invalid.

    Args:
        grid: demodulated frame, complex [rx_chain, symbol, subcarrier]
        frame: the transmitted frame
        threshold: smallest usable transmitted magnitude

    """
    grid = check_numpy(grid, dtype=complex)
    assert grid.shape[0] == cfg.n_rx, f"expected {cfg.n_rx} RX chains, got {grid.shape[0]}"
    preamble = frame.segment("mimo_preamble")
    occupied = np.asarray(cfg.occupied_subcarriers)
    h = np.zeros((cfg.n_sc, cfg.n_virtual), dtype=complex)
    valid = np.ones(cfg.n_virtual, dtype=bool)
    for tx in range(cfg.n_tx):
        x = frame.preamble_symbol(tx)[occupied]
        usable = np.abs(x) > threshold
        if frame.kind == FrameKind.NDP:
            assert usable.all(), "NDP preamble must be constant modulus"
        y = grid[:, preamble.start + tx, occupied]
        for rx in range(cfg.n_rx):
            col = virtual_index(rx, tx, cfg.n_tx)
            if usable.all():
                h[occupied, col] = y[rx] / x
            else:
                valid[col] = False
    if not valid.all():
        logger.debug(f"{np.count_nonzero(~valid)} virtual channels not sounded by this frame")
    return MeasurementMatrix(h=h, valid=valid, frame_index=frame_index)
