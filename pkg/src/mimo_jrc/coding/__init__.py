from .convolutional import (
    CONSTRAINT_LENGTH,
    PUNCTURE_PATTERNS,
    conv_encode,
    depuncture,
    puncture,
    viterbi_decode,
)
from .crc import CRC32_RESIDUE, crc32, crc32_append, crc_check
from .modulation import BITS_PER_SYMBOL, constellation, demap_hard, demap_soft, map_symbols
from .scrambler import descramble, prbs, scramble

__all__ = [
    "crc32",
    "crc32_append",
    "crc_check",
    "CRC32_RESIDUE",
    "prbs",
    "scramble",
    "descramble",
    "conv_encode",
    "puncture",
    "depuncture",
    "viterbi_decode",
    "CONSTRAINT_LENGTH",
    "PUNCTURE_PATTERNS",
    "map_symbols",
    "demap_hard",
    "demap_soft",
    "constellation",
    "BITS_PER_SYMBOL",
]
