"""Additive x^7 + x^4 + 1 scrambler."""

from functools import lru_cache

import numpy as np

from mimo_jrc.utils import check_numpy

PERIOD = 127


@lru_cache(maxsize=128)
def _prbs_period(seed: int) -> np.ndarray:
    state = seed
    out = np.empty(PERIOD, dtype=np.uint8)
    for i in range(PERIOD):
        feedback = ((state >> 6) ^ (state >> 3)) & 1
        state = ((state << 1) | feedback) & 0x7F
        out[i] = feedback
    out.flags.writeable = False
    return out


def prbs(seed: int, n: int) -> np.ndarray:
    """First ``n`` bits of the scrambler sequence started from the 7-bit ``seed``.

    The seed's most significant bit is register stage 7. Stages 7 and 4 are XORed,
    the result is emitted and shifted in.

    """
    if not 0 < seed < 128:
        raise ValueError(f"scrambler seed must be in [1, 127], got {seed}")
    return np.resize(_prbs_period(seed), n)


def scramble(bits, seed: int) -> np.ndarray:
    bits = check_numpy(bits, dtype=np.uint8)
    return bits ^ prbs(seed, bits.size)


descramble = scramble
