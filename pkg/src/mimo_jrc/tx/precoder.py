"""Steering weights and frame assembly."""

import os
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from mimo_jrc.coding import map_symbols
from mimo_jrc.config import SystemConfig
from mimo_jrc.frame import FrameGrid, FrameKind, frame_layout, training_sequences
from mimo_jrc.io.feedback import read_feedback
from mimo_jrc.tx.stream_encoder import HEADER_CODED_BITS, HEADER_MCS, EncodedStream, build_header
from mimo_jrc.utils import EPS, FrameError, check_numpy, get_logger

logger = get_logger(__name__)


@dataclass
class SteeringMatrix:
    """Per-subcarrier transmit weights.

    Args:
        weights: complex [subcarrier, tx_chain], unit L2 norm on every subcarrier
        source: ``identity`` or ``feedback-file``

    """

    weights: np.ndarray
    source: str = "identity"

    @classmethod
    def identity(cls, cfg: SystemConfig) -> "SteeringMatrix":
        weights = np.zeros((cfg.n_sc, cfg.n_tx), dtype=complex)
        weights[:, 0] = 1
        return cls(weights, "identity")


def compute_steering(feedback, cfg: SystemConfig) -> SteeringMatrix:
    """Maximum-ratio transmission weights conj(h) / ||h|| from channel feedback.

    Subcarriers with an all-zero feedback vector keep identity steering.

    """
    h = check_numpy(feedback, dtype=complex)
    assert h.shape == (cfg.n_sc, cfg.n_tx), f"feedback shape {h.shape} does not match ({cfg.n_sc}, {cfg.n_tx})"
    norms = np.linalg.norm(h, axis=1)
    weights = SteeringMatrix.identity(cfg).weights
    usable = norms > np.sqrt(EPS)
    weights[usable] = h[usable].conj() / norms[usable, None]
    if not usable[cfg.occupied_subcarriers].all():
        n_fallback = np.count_nonzero(~usable[cfg.occupied_subcarriers])
        logger.warning(f"{n_fallback} occupied subcarriers fall back to identity")
    return SteeringMatrix(weights, "feedback-file")


def load_steering(path: Optional[Union[str, os.PathLike]], cfg: SystemConfig) -> SteeringMatrix:
    """Steering from the latest feedback file, identity when there is none."""
    if path is None or not os.path.exists(path):
        logger.warning(f"No channel feedback at {path}, using identity steering")
        return SteeringMatrix.identity(cfg)
    return compute_steering(read_feedback(path, cfg), cfg)


def ofdm_symbol(data_values, cfg: SystemConfig) -> np.ndarray:
    """Places values on the data subcarriers and the known pilots on the pilot subcarriers."""
    symbol = np.zeros(cfg.n_sc, dtype=complex)
    symbol[cfg.data_subcarriers] = data_values
    symbol[cfg.pilot_subcarriers] = cfg.pilot_values
    return symbol


def assemble_frame(
    stream: Optional[EncodedStream],
    kind: FrameKind,
    steering: SteeringMatrix,
    cfg: SystemConfig,
) -> FrameGrid:
    """Builds the frequency-domain grid of one frame.

    STS, LTS and header go unprecoded on the first two chains, scaled by 1/sqrt(2). MIMO
    preamble slot l is sent only on chain l: the plain LTS for NDP frames and the LTS times
    the chain's steering weight for DATA frames. Payload symbols are steered on every chain.

    Raises:
        FrameError: stream missing for DATA, present for NDP, or too long

    """
    if kind == FrameKind.DATA and stream is None:
        raise FrameError("DATA frames need an encoded stream")
    if kind == FrameKind.NDP and stream is not None:
        raise FrameError("NDP frames carry no payload")
    n_data = 0 if stream is None else stream.n_symbols
    if n_data > cfg.max_payload_symbols:
        raise FrameError(f"{n_data} payload symbols exceed the frame limit of {cfg.max_payload_symbols}")
    w = steering.weights
    assert w.shape == (cfg.n_sc, cfg.n_tx), "steering does not match the config"
    layout = frame_layout(kind, n_data, cfg)
    grid = np.zeros((cfg.n_tx, layout[-1].stop, cfg.n_sc), dtype=complex)
    seg = {s.name: s for s in layout}
    sts, lts = training_sequences(cfg)
    chains = min(2, cfg.n_tx)
    scale = 1 / np.sqrt(chains)
    grid[:chains, seg["sts"].symbols] = sts * scale
    grid[:chains, seg["lts"].symbols] = lts * scale

    mcs = None if stream is None else stream.mcs
    header_bits = np.zeros(len(cfg.data_subcarriers), dtype=np.uint8)
    payload_len = 0 if stream is None else stream.source_len
    header_bits[:HEADER_CODED_BITS] = build_header(mcs or HEADER_MCS, payload_len, kind)
    grid[:chains, seg["header"].start] = ofdm_symbol(map_symbols(header_bits, "BPSK"), cfg) * scale

    preamble = seg["mimo_preamble"]
    for slot in range(cfg.n_tx):
        grid[slot, preamble.start + slot] = lts if kind == FrameKind.NDP else lts * w[:, slot]

    if stream is not None:
        symbols = map_symbols(stream.bits, stream.mcs.modulation).reshape(n_data, len(cfg.data_subcarriers))
        body = np.stack([ofdm_symbol(s, cfg) for s in symbols])
        grid[:, seg["data"].symbols] = body[None, :, :] * w.T[:, None, :]
    return FrameGrid(
        kind=kind,
        layout=layout,
        grid=grid,
        mcs=mcs,
        payload_len=payload_len,
        steering_source=steering.source,
    )
