"""Streaming SISO receiver for the JRC waveform."""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from mimo_jrc.coding import demap_hard, map_symbols
from mimo_jrc.config import Mcs, ReceiverConfig, SystemConfig
from mimo_jrc.frame import N_HEADER, N_LTS, N_STS, FrameKind, sts_period, training_sequences
from mimo_jrc.io.feedback import write_feedback
from mimo_jrc.rx.decoder import decode_header, decode_payload
from mimo_jrc.rx.equalizer import (
    ChannelEstimate,
    Equalized,
    equalize,
    estimate_snr,
    evm,
    ls_estimate,
    lts_noise_variance,
    mimo_ls_estimate,
    sta_update,
)
from mimo_jrc.rx.sync import SyncState, dc_block, delay_correlate, derotate, estimate_cfo, find_plateaus
from mimo_jrc.tx.ofdm import ofdm_demodulate
from mimo_jrc.tx.stream_encoder import frame_symbol_count
from mimo_jrc.utils import HeaderError, check_numpy, get_logger, ifnone

logger = get_logger(__name__)

_PREFIX = N_STS + N_LTS + N_HEADER


@dataclass
class DecodedPacket:
    """One received frame.

    Args:
        payload: decoded payload, empty for NDP frames
        mcs: payload modulation and coding
        crc_ok: the CRC residue check passed (always True for NDP frames, which carry no CRC)
        snr_db: pilot based SNR estimate
        frame_index: position of the frame in the received stream
        kind: NDP or DATA
        start: first sample of the frame after fine timing
        cfo_hz: total frequency offset removed
        evm: RMS error vector magnitude of the payload symbols, as a fraction
        channel: channel estimate, per TX chain for NDP frames

    """

    payload: bytes
    mcs: Mcs
    crc_ok: bool
    snr_db: float
    frame_index: int
    kind: FrameKind = FrameKind.DATA
    start: int = 0
    cfo_hz: float = 0.0
    evm: float = 0.0
    channel: Optional[ChannelEstimate] = field(default=None, repr=False)


class CommReceiver:
    """Detects, synchronises and decodes every frame of a sample stream.

    NDP frames yield a per-TX channel estimate which is written to
    ``receiver_config.feedback_path`` when one is configured.

    """

    def __init__(self, config: SystemConfig, receiver_config: Optional[ReceiverConfig] = None):
        self.config = config
        self.receiver_config = ifnone(receiver_config, ReceiverConfig())
        self.last_estimate: Optional[ChannelEstimate] = None
        self.frames_dropped = 0
        _, self._lts = training_sequences(config)

    def receive(self, stream) -> List[DecodedPacket]:
        """Decodes all frames of ``stream`` in order."""
        cfg, rcfg = self.config, self.receiver_config
        r = check_numpy(getattr(stream, "samples", stream), dtype=complex).reshape(-1)
        metric = delay_correlate(dc_block(r, rcfg.dc_block_length), sts_period(cfg), rcfg.correlation_window)
        packets, resume = [], 0
        for plateau in find_plateaus(metric, rcfg.detection_threshold, rcfg.plateau_length):
            if plateau < resume:
                continue
            window = metric[max(plateau - rcfg.correlation_window, 0) : plateau + 2 * cfg.symbol_length]
            packet, end = self.receive_frame(r, SyncState(detect_metric=window, frame_start=plateau), len(packets))
            if packet is not None:
                packets.append(packet)
            resume = end
        logger.debug(f"Received {len(packets)} frames, dropped {self.frames_dropped}")
        return packets

    def _demodulate(self, r: np.ndarray, start: int, n_symbols: int, cfo: float) -> np.ndarray:
        segment = r[start : start + n_symbols * self.config.symbol_length]
        segment = derotate(segment, cfo, self.config, first_sample=start)
        return ofdm_demodulate(segment, self.config, n_symbols=n_symbols)[0]

    def receive_frame(
        self, r: np.ndarray, sync: SyncState, frame_index: int = 0
    ) -> Tuple[Optional[DecodedPacket], int]:
        """Synchronises and decodes the frame detected at ``sync.frame_start``.

        Returns:
            the packet, or None when the frame was dropped, and the sample after the frame
            (where the search for the next frame resumes)

        """
        cfg, rcfg = self.config, self.receiver_config
        length = cfg.symbol_length
        sync = estimate_cfo(r, sync, cfg, rcfg)
        start = max(sync.timing_offset - rcfg.timing_backoff, 0)
        if start + (_PREFIX + cfg.n_tx) * length > r.size:
            logger.warning(f"Frame at sample {sync.timing_offset} is truncated")
            self.frames_dropped += 1
            return None, r.size
        prefix = self._demodulate(r, start, _PREFIX, sync.cfo)
        header_channel = ls_estimate(prefix[N_STS : N_STS + N_LTS], self._lts, cfg)
        header = equalize(prefix[N_STS + N_LTS], header_channel, cfg, rcfg.erasure_floor)
        try:
            mcs, payload_len, kind = decode_header(header.data[0], header.erased)
        except HeaderError as e:
            logger.warning(f"Frame at sample {sync.timing_offset} dropped: {e}")
            self.frames_dropped += 1
            return None, start + _PREFIX * length
        n_data = 0 if kind == FrameKind.NDP else frame_symbol_count(payload_len, mcs, cfg)
        n_symbols = _PREFIX + cfg.n_tx + n_data
        end = start + n_symbols * length
        if end > r.size:
            logger.warning(f"{kind.name} frame at sample {sync.timing_offset} is truncated")
            self.frames_dropped += 1
            return None, r.size
        grid = self._demodulate(r, start, n_symbols, sync.cfo)
        preamble = grid[_PREFIX : _PREFIX + cfg.n_tx]
        estimate = mimo_ls_estimate(preamble, self._lts, cfg)
        common = dict(frame_index=frame_index, kind=kind, start=sync.timing_offset, cfo_hz=sync.cfo)
        if kind == FrameKind.NDP:
            self.last_estimate = estimate
            if rcfg.feedback_path:
                write_feedback(estimate.h, rcfg.feedback_path, cfg)
            snr = estimate_snr(header.pilots, cfg.pilot_values, rcfg.snr_cap_db)
            return DecodedPacket(b"", mcs, True, snr, channel=estimate, **common), end
        # preamble slots the precoder left silent hold noise only
        lts_noise = lts_noise_variance(prefix[N_STS : N_STS + N_LTS], self._lts, cfg)
        eq = self._equalize_payload(grid[_PREFIX + cfg.n_tx :], estimate.effective(lts_noise), mcs)
        snr = estimate_snr(eq.pilots, cfg.pilot_values, rcfg.snr_cap_db)
        noise_var = 10 ** (-snr / 10)
        payload, crc_ok = decode_payload(
            eq.data, mcs, payload_len, cfg, eq.erased, soft=rcfg.soft_decoding, noise_var=noise_var
        )
        decided = map_symbols(demap_hard(eq.data.reshape(-1), mcs.modulation), mcs.modulation)
        if not crc_ok:
            logger.debug(f"Frame {frame_index}: CRC failure at {snr:.1f} dB")
        return (
            DecodedPacket(
                payload, mcs, crc_ok, snr, evm=evm(eq.data.reshape(-1), decided), channel=estimate, **common
            ),
            end,
        )

    def _equalize_payload(self, data_grid: np.ndarray, estimate: ChannelEstimate, mcs: Mcs) -> Equalized:
        cfg, rcfg = self.config, self.receiver_config
        if rcfg.estimator == "LS":
            return equalize(data_grid, estimate, cfg, rcfg.erasure_floor)
        # decision directed tracking, one symbol at a time
        results = []
        for y in data_grid:
            eq = equalize(y, estimate, cfg, rcfg.erasure_floor)
            results.append(eq)
            decided = np.zeros(cfg.n_sc, dtype=complex)
            decided[cfg.data_subcarriers] = map_symbols(demap_hard(eq.data[0], mcs.modulation), mcs.modulation)
            decided[cfg.pilot_subcarriers] = cfg.pilot_values
            estimate = sta_update(
                estimate, y * np.exp(-1j * eq.phase[0]), decided, cfg, rcfg.sta_alpha, rcfg.sta_beta
            )
        return Equalized(
            np.concatenate([e.data for e in results]),
            np.concatenate([e.pilots for e in results]),
            results[0].erased,
            np.concatenate([e.phase for e in results]),
        )
