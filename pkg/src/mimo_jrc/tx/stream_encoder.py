"""Payload and header bit streams: CRC, scrambling, convolutional coding and puncturing."""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from mimo_jrc.coding import conv_encode, crc32_append, puncture, scramble
from mimo_jrc.config import Mcs, SystemConfig
from mimo_jrc.frame import FrameKind
from mimo_jrc.utils import FrameError, HeaderError, bytes_to_bits, get_logger

logger = get_logger(__name__)

TAIL_BITS = 6
HEADER_BITS = 24
HEADER_CODED_BITS = 2 * HEADER_BITS
MAX_PAYLOAD_LEN = 4095
HEADER_MCS = Mcs("BPSK", "1/2")
# bit offsets of the header fields, LSB first
_MCS_BITS = slice(0, 4)
_LEN_BITS = slice(4, 16)
_KIND_BIT = 16
_PARITY_BIT = 17


@dataclass
class EncodedStream:
    """Coded and punctured payload bits ready for mapping.

    Args:
        bits: coded bits, ``n_symbols`` times the coded bits per OFDM symbol
        mcs: modulation and coding scheme
        source_len: payload length in bytes, CRC and seed excluded
        seed: scrambler seed, sent in clear as the first byte
        n_symbols: payload OFDM symbols

    """

    bits: np.ndarray
    mcs: Mcs
    source_len: int
    seed: int
    n_symbols: int


def _int_bits(value: int, width: int) -> np.ndarray:
    return ((value >> np.arange(width)) & 1).astype(np.uint8)


def _bits_int(bits) -> int:
    return int(np.dot(np.asarray(bits, dtype=np.int64), 1 << np.arange(len(bits))))


def header_fields(mcs: Mcs, payload_len: int, kind: FrameKind) -> np.ndarray:
    """The 24 uncoded header bits: MCS id, length, kind, even parity, tail."""
    if not 0 <= payload_len <= MAX_PAYLOAD_LEN:
        raise FrameError(f"payload length {payload_len} does not fit the 12-bit length field")
    if kind == FrameKind.NDP and payload_len:
        raise FrameError("NDP frames carry no payload")
    bits = np.zeros(HEADER_BITS, dtype=np.uint8)
    bits[_MCS_BITS] = _int_bits(mcs.mcs_id, 4)
    bits[_LEN_BITS] = _int_bits(payload_len, 12)
    bits[_KIND_BIT] = kind.value
    bits[_PARITY_BIT] = bits[:_PARITY_BIT].sum() % 2
    return bits


def build_header(mcs: Mcs, payload_len: int, kind: FrameKind) -> np.ndarray:
    """Header bits encoded at BPSK rate 1/2, 48 coded bits."""
    return conv_encode(header_fields(mcs, payload_len, kind))


def parse_header(bits) -> Tuple[Mcs, int, FrameKind]:
    """Inverse of ``header_fields``.

    Raises:
        HeaderError: parity failure, unknown MCS id or inconsistent kind/length

    """
    bits = np.asarray(bits, dtype=np.uint8)
    assert bits.size >= _PARITY_BIT + 1, "header too short"
    if bits[: _PARITY_BIT + 1].sum() % 2:
        raise HeaderError("header parity check failed")
    try:
        mcs = Mcs.from_id(_bits_int(bits[_MCS_BITS]))
    except ValueError as e:
        raise HeaderError(str(e)) from e
    kind = FrameKind(int(bits[_KIND_BIT]))
    length = _bits_int(bits[_LEN_BITS])
    if (kind == FrameKind.NDP) != (length == 0):
        raise HeaderError(f"{kind.name} frame with payload length {length}")
    return mcs, length, kind


def frame_symbol_count(payload_len: int, mcs: Mcs, cfg: SystemConfig) -> int:
    """Payload OFDM symbols for ``payload_len`` bytes: seed byte, payload, CRC and tail."""
    n_info = 8 * (1 + payload_len + 4) + TAIL_BITS
    return math.ceil(n_info / mcs.data_bits_per_symbol(len(cfg.data_subcarriers)))


def encode_payload(payload: bytes, mcs: Mcs, seed: int, cfg: SystemConfig) -> EncodedStream:
    """Frames, scrambles, encodes and punctures a payload.

    The information bits are the seed byte (not scrambled), then the scrambled payload
    followed by its CRC-32, then 6 zero tail bits and zero padding up to a whole number
    of OFDM symbols.

    Raises:
        FrameError: empty or oversized payload, or more symbols than ``max_payload_symbols``

    """
    payload = bytes(payload)
    if not 1 <= len(payload) <= MAX_PAYLOAD_LEN:
        raise FrameError(f"payload must hold 1 to {MAX_PAYLOAD_LEN} bytes, got {len(payload)}")
    if not 0 < seed < 128:
        raise FrameError(f"scrambler seed must be in [1, 127], got {seed}")
    n_symbols = frame_symbol_count(len(payload), mcs, cfg)
    if n_symbols > cfg.max_payload_symbols:
        raise FrameError(
            f"{len(payload)} bytes at {mcs} need {n_symbols} symbols,"
            f" the frame limit is {cfg.max_payload_symbols}"
        )
    n_dbps = mcs.data_bits_per_symbol(len(cfg.data_subcarriers))
    info = np.zeros(n_symbols * n_dbps, dtype=np.uint8)
    framed = np.concatenate([bytes_to_bits(bytes([seed])), scramble(bytes_to_bits(crc32_append(payload)), seed)])
    info[: framed.size] = framed
    coded = puncture(conv_encode(info), mcs.rate)
    logger.debug(f"Encoded {len(payload)} bytes at {mcs} into {n_symbols} symbols")
    return EncodedStream(bits=coded, mcs=mcs, source_len=len(payload), seed=seed, n_symbols=n_symbols)
