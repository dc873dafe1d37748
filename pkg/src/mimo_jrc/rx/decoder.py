"""Header and payload decoding: demapping, depuncturing, Viterbi, descrambling and CRC."""

from typing import Optional, Tuple

import numpy as np

from mimo_jrc.coding import crc_check, demap_hard, demap_soft, depuncture, descramble, viterbi_decode
from mimo_jrc.config import Mcs, SystemConfig
from mimo_jrc.frame import FrameKind
from mimo_jrc.tx.stream_encoder import HEADER_BITS, HEADER_CODED_BITS, TAIL_BITS, parse_header
from mimo_jrc.utils import bits_to_bytes, check_numpy


def symbol_metrics(
    symbols,
    modulation: str,
    erased: Optional[np.ndarray] = None,
    soft: bool = False,
    noise_var: float = 1.0,
) -> np.ndarray:
    """Bipolar decoder metrics of equalized symbols, 0 for every bit of an erased symbol.

    Args:
        symbols: complex [symbol, data subcarrier] or flat
        erased: data subcarriers to erase in every symbol
        soft: max-log LLRs instead of +-1 hard decisions

    """
    z = np.atleast_2d(check_numpy(symbols, dtype=complex))
    flat = z.reshape(-1)
    if soft:
        metrics = demap_soft(flat, modulation, noise_var)
    else:
        metrics = 2.0 * demap_hard(flat, modulation) - 1
    metrics = metrics.reshape(z.shape[0], z.shape[1], -1)
    if erased is not None and np.any(erased):
        metrics[:, np.asarray(erased)] = 0
    return metrics.reshape(-1)


def decode_header(symbol, erased: Optional[np.ndarray] = None) -> Tuple[Mcs, int, FrameKind]:
    """Decodes the header from the equalized data subcarriers of the header symbol.

    Raises:
        HeaderError: parity failure or invalid fields

    """
    z = check_numpy(symbol, dtype=complex).reshape(-1)
    erased_head = None if erased is None else np.asarray(erased)[:HEADER_CODED_BITS]
    metrics = symbol_metrics(z[:HEADER_CODED_BITS], "BPSK", erased_head)
    return parse_header(viterbi_decode(metrics, HEADER_BITS))


def decode_payload(
    symbols,
    mcs: Mcs,
    payload_len: int,
    cfg: SystemConfig,
    erased: Optional[np.ndarray] = None,
    soft: bool = False,
    noise_var: float = 1.0,
) -> Tuple[bytes, bool]:
    """Recovers the payload and checks its CRC.

    Returns:
        the payload bytes (possibly corrupted) and whether the CRC check passed

    """
    metrics = symbol_metrics(symbols, mcs.modulation, erased, soft, noise_var)
    info = viterbi_decode(depuncture(metrics, mcs.rate))
    n_framed = 8 * (payload_len + 4)
    if info.size < 8 + n_framed + TAIL_BITS:
        return b"", False
    seed = int(bits_to_bytes(info[:8])[0])
    if not 0 < seed < 128:
        return bytes(payload_len), False
    framed = bits_to_bytes(descramble(info[8 : 8 + n_framed], seed))
    return framed[:payload_len], crc_check(framed)
