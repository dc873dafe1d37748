"""K=7 (133, 171) convolutional code, 802.11 puncturing and a Viterbi decoder.

Decoder inputs are bipolar metrics: positive values favour a 1, negative a 0 and
0 marks an erasure. Hard bits map to +-1 and max-log LLRs can be passed directly.

"""

from fractions import Fraction
from typing import Optional, Union

import numpy as np

from mimo_jrc.utils import check_numpy

CONSTRAINT_LENGTH = 7
N_STATES = 2 ** (CONSTRAINT_LENGTH - 1)
# generator taps, current input first
TAPS_A = np.array([1, 0, 1, 1, 0, 1, 1], dtype=np.uint8)  # 0o133
TAPS_B = np.array([1, 1, 1, 1, 0, 0, 1], dtype=np.uint8)  # 0o171
PUNCTURE_PATTERNS = {
    Fraction(1, 2): np.array([1, 1], dtype=bool),
    Fraction(3, 4): np.array([1, 1, 1, 0, 0, 1], dtype=bool),
}

_Rate = Union[str, Fraction]


def _pattern(rate: _Rate) -> np.ndarray:
    rate = Fraction(rate)
    if rate not in PUNCTURE_PATTERNS:
        raise ValueError(f"Unsupported code rate {rate}")
    return PUNCTURE_PATTERNS[rate]


def conv_encode(bits) -> np.ndarray:
    """Rate 1/2 encoding starting from the all-zero state, output interleaved A0 B0 A1 B1 ..."""
    bits = check_numpy(bits, dtype=np.uint8)
    out = np.empty(2 * bits.size, dtype=np.uint8)
    out[0::2] = np.convolve(bits, TAPS_A)[: bits.size] % 2
    out[1::2] = np.convolve(bits, TAPS_B)[: bits.size] % 2
    return out


def puncture(bits, rate: _Rate) -> np.ndarray:
    bits = np.asarray(bits)
    pattern = _pattern(rate)
    if bits.size % pattern.size:
        raise ValueError(f"{bits.size} bits is not a multiple of the puncturing period {pattern.size}")
    return bits[np.tile(pattern, bits.size // pattern.size)]


def depuncture(metrics, rate: _Rate) -> np.ndarray:
    """Re-inserts the deleted positions of a punctured stream as erasures (metric 0)."""
    metrics = check_numpy(metrics, dtype=float)
    pattern = _pattern(rate)
    kept = int(pattern.sum())
    if metrics.size % kept:
        raise ValueError(f"{metrics.size} values is not a multiple of {kept} kept bits per period")
    mask = np.tile(pattern, metrics.size // kept)
    out = np.zeros(mask.size)
    out[mask] = metrics
    return out


def _trellis():
    # state = previous six inputs, most recent in bit 5
    states = np.arange(N_STATES)
    expected = np.empty((N_STATES, 2, 2))
    for s in states:
        for u in (0, 1):
            register = [u] + [(s >> (5 - i)) & 1 for i in range(6)]
            a = int(np.dot(TAPS_A, register)) % 2
            b = int(np.dot(TAPS_B, register)) % 2
            expected[s, u] = (2 * a - 1, 2 * b - 1)
    inputs = states >> 5
    pred0 = (states & 31) << 1
    pred1 = pred0 | 1
    return inputs, pred0, pred1, expected[pred0, inputs], expected[pred1, inputs]


_INPUTS, _PRED0, _PRED1, _EXP0, _EXP1 = _trellis()


def viterbi_decode(metrics, n_bits: Optional[int] = None) -> np.ndarray:
    """Maximum-likelihood decoding of a terminated rate 1/2 stream.

    Args:
        metrics: bipolar mother-rate metrics, two per information bit
        n_bits: number of decoded bits to return. Defaults to all, tail included

    Returns:
        decoded bits, traced back from the all-zero end state

    """
    metrics = check_numpy(metrics, dtype=float)
    assert metrics.size % 2 == 0, "rate 1/2 stream must have an even length"
    pairs = metrics.reshape(-1, 2)
    n_steps = pairs.shape[0]
    path = np.full(N_STATES, -np.inf)
    path[0] = 0.0
    decisions = np.empty((n_steps, N_STATES), dtype=bool)
    for t in range(n_steps):
        cand0 = path[_PRED0] + _EXP0 @ pairs[t]
        cand1 = path[_PRED1] + _EXP1 @ pairs[t]
        decisions[t] = cand1 > cand0
        path = np.where(decisions[t], cand1, cand0)
        path -= path.max()
    bits = np.empty(n_steps, dtype=np.uint8)
    state = 0
    for t in range(n_steps - 1, -1, -1):
        bits[t] = _INPUTS[state]
        state = ((state & 31) << 1) | int(decisions[t, state])
    return bits if n_bits is None else bits[:n_bits]
