"""Self-interference and static background estimation by windowed averaging."""

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Optional

import numpy as np

from mimo_jrc.radar.estimation import MeasurementMatrix
from mimo_jrc.utils import get_logger

logger = get_logger(__name__)


@dataclass
class SiEstimate:
    """Mean of the last ``n_win`` measurements captured while nothing but the background was present.

    Args:
        n_win: depth of the measurement window
        window: captured measurements, oldest first
        h_si: mean of the window, None before the first capture
        active: subtract ``h_si`` from new measurements
        capturing: new measurements enter the window

    """

    n_win: int = 10
    window: Deque[np.ndarray] = field(default_factory=deque)
    h_si: Optional[np.ndarray] = None
    active: bool = False
    capturing: bool = False

    def __post_init__(self):
        assert self.n_win > 0, "window depth must be positive"
        self.window = deque(self.window, maxlen=self.n_win)

    @property
    def provisional(self) -> bool:
        return len(self.window) < self.n_win


def update_si(si: SiEstimate, latest: MeasurementMatrix) -> SiEstimate:
    """Pushes ``latest`` into the window, evicting the oldest entry, and re-averages."""
    assert si.capturing, "self-interference capture is not active"
    window = deque(si.window, maxlen=si.n_win)
    window.append(latest.h.copy())
    h_si = np.mean(np.stack(window), axis=0)
    if len(window) < si.n_win:
        logger.debug(f"Provisional SI estimate from {len(window)} of {si.n_win} frames")
    return SiEstimate(n_win=si.n_win, window=window, h_si=h_si, active=True, capturing=True)


def remove_si(latest: MeasurementMatrix, si: SiEstimate) -> MeasurementMatrix:
    """Subtracts the background estimate. Pass-through while the estimate is inactive."""
    if not si.active or si.h_si is None:
        return latest
    assert si.h_si.shape == latest.h.shape, "estimate and measurement dimensions differ"
    h = latest.h - si.h_si
    h[:, ~latest.valid] = 0
    return MeasurementMatrix(h=h, valid=latest.valid.copy(), frame_index=latest.frame_index)
