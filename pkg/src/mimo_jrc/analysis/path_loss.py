"""Log-distance path-loss model and its least-squares fit."""

from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np
from sklearn.linear_model import LinearRegression

from mimo_jrc.utils import check_numpy


@dataclass
class PathLossFit:
    """Fitted log-distance model ``snr_db = beta - alpha * 10 log10(d / d0)``.

    Args:
        alpha: path-loss exponent
        beta: SNR at the reference distance, dB
        d0: reference distance, m
        residual: sum of squared dB errors of the fit
        n_samples: number of (distance, SNR) pairs used

    """

    alpha: float
    beta: float
    d0: float
    residual: float
    n_samples: int

    def predict(self, distance) -> np.ndarray:
        return path_loss_model(self.beta, self.alpha, distance, self.d0)


def path_loss_model(beta: float, alpha: float, distance, d0: float = 7.0) -> np.ndarray:
    return beta - alpha * 10 * np.log10(check_numpy(distance, dtype=float) / d0)


def fit_path_loss(samples: Iterable[Tuple[float, float]], d0: float = 7.0) -> PathLossFit:
    """Least-squares fit of the log-distance model to ``(distance, snr_db)`` pairs.

    The model is linear in ``x = 10 log10(d / d0)`` with slope ``-alpha`` and intercept
    ``beta``, so the ordinary least-squares line is the global optimum.

    Raises:
        ValueError: fewer than two distinct distances, or a non-positive distance

    """
    data = check_numpy(list(samples), dtype=float).reshape(-1, 2)
    distance, snr_db = data[:, 0], data[:, 1]
    if d0 <= 0 or np.any(distance <= 0):
        raise ValueError("distances and d0 must be positive")
    if np.unique(distance).size < 2:
        raise ValueError("at least two distinct distances are needed, the fit is singular otherwise")
    x = 10 * np.log10(distance / d0)
    model = LinearRegression().fit(x[:, None], snr_db)
    residual = float(np.sum((snr_db - model.predict(x[:, None])) ** 2))
    return PathLossFit(
        alpha=float(-model.coef_[0]),
        beta=float(model.intercept_),
        d0=d0,
        residual=residual,
        n_samples=len(distance),
    )
