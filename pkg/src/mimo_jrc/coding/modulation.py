"""Gray-mapped BPSK, QPSK and 16-QAM with unit average power."""

from functools import lru_cache

import numpy as np

from mimo_jrc.utils import check_numpy

BITS_PER_SYMBOL = {"BPSK": 1, "QPSK": 2, "QAM16": 4}
_QAM16_SCALE = 1 / np.sqrt(10)


def _pam4(b0, b1):
    # 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3
    return (2.0 * b0 - 1) * (3 - 2.0 * b1)


def map_symbols(bits, modulation: str) -> np.ndarray:
    bits = check_numpy(bits, dtype=np.uint8)
    m = BITS_PER_SYMBOL[modulation]
    assert bits.size % m == 0, f"{bits.size} bits cannot be split into {modulation} symbols"
    b = bits.reshape(-1, m).astype(float)
    if modulation == "BPSK":
        return (2 * b[:, 0] - 1).astype(complex)
    if modulation == "QPSK":
        return ((2 * b[:, 0] - 1) + 1j * (2 * b[:, 1] - 1)) / np.sqrt(2)
    return (_pam4(b[:, 0], b[:, 1]) + 1j * _pam4(b[:, 2], b[:, 3])) * _QAM16_SCALE


def demap_hard(symbols, modulation: str) -> np.ndarray:
    symbols = check_numpy(symbols, dtype=complex)
    if modulation == "BPSK":
        return (symbols.real > 0).astype(np.uint8)
    if modulation == "QPSK":
        return np.stack([symbols.real > 0, symbols.imag > 0], axis=1).reshape(-1).astype(np.uint8)
    i, q = symbols.real / _QAM16_SCALE, symbols.imag / _QAM16_SCALE
    return np.stack([i > 0, np.abs(i) < 2, q > 0, np.abs(q) < 2], axis=1).reshape(-1).astype(np.uint8)


@lru_cache(maxsize=None)
def constellation(modulation: str):
    """All points of a constellation with their bit labels, label i in row i."""
    m = BITS_PER_SYMBOL[modulation]
    labels = ((np.arange(2**m)[:, None] >> np.arange(m)[::-1]) & 1).astype(np.uint8)
    return map_symbols(labels.reshape(-1), modulation), labels


def demap_soft(symbols, modulation: str, noise_var: float = 1.0) -> np.ndarray:
    """Max-log LLRs, positive when a 1 is more likely. One value per coded bit."""
    symbols = check_numpy(symbols, dtype=complex)
    points, labels = constellation(modulation)
    distances = np.abs(symbols[:, None] - points[None, :]) ** 2
    llr = np.empty((symbols.size, labels.shape[1]))
    for j in range(labels.shape[1]):
        ones = labels[:, j] == 1
        llr[:, j] = distances[:, ~ones].min(axis=1) - distances[:, ones].min(axis=1)
    return (llr / max(noise_var, 1e-12)).reshape(-1)
