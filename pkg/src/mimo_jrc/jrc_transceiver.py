"""End-to-end joint radar-communication transceiver."""

import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from mimo_jrc.channel import CommBaseband, Scene, simulate_comm, simulate_radar
from mimo_jrc.config import Mcs, RadarConfig, ReceiverConfig, SystemConfig
from mimo_jrc.frame import FrameGrid, FrameKind
from mimo_jrc.io.detection_log import detections_frame
from mimo_jrc.radar import RadarProcessor, RadarResult, split_frames
from mimo_jrc.rx import CommReceiver, DecodedPacket
from mimo_jrc.tx import (
    SteeringMatrix,
    TxBaseband,
    assemble_frame,
    compute_steering,
    encode_payload,
    load_steering,
    ofdm_modulate,
)
from mimo_jrc.utils import get_logger, ifnone

logger = get_logger(__name__)

_SEED_SPACE = 127


@dataclass
class LoopbackReport:
    """Outcome of a loopback run.

    Args:
        sent: DATA payloads handed to the transmitter
        packets: frames decoded by the communication receiver
        radar: one radar result per transmitted frame, in order

    """

    sent: List[bytes]
    packets: List[DecodedPacket]
    radar: List[RadarResult] = field(default_factory=list)

    @property
    def delivered(self) -> int:
        """Sent payloads received with a valid CRC and identical content."""
        pending = Counter(self.sent)
        count = 0
        for p in self.packets:
            if p.kind == FrameKind.DATA and p.crc_ok and pending[p.payload] > 0:
                pending[p.payload] -= 1
                count += 1
        return count

    @property
    def per(self) -> float:
        """Packet error rate over the DATA frames."""
        return 1.0 - self.delivered / len(self.sent) if self.sent else 0.0

    @property
    def mean_snr_db(self) -> float:
        snr = [p.snr_db for p in self.packets if p.kind == FrameKind.DATA]
        return float(np.mean(snr)) if snr else float("nan")

    def detections(self) -> pd.DataFrame:
        return detections_frame(d.as_record(r.image.frame_index) for r in self.radar for d in r.detections)


class JrcTransceiver:
    """Transmitter, radar processor and communication receiver sharing one configuration.

    The transmitter steers DATA frames with the weights derived from the latest channel
    feedback. Every transmitted frame is also a radar measurement: its reflections are
    processed with full knowledge of the sent grid while the remote receiver decodes it.

    Args:
        config: radio configuration
        radar_config: radar processing settings
        receiver_config: communication receiver settings. Its ``feedback_path`` is where NDP
            frames leave their channel estimate and where the transmitter picks it up.

    """

    def __init__(
        self,
        config: SystemConfig,
        radar_config: Optional[RadarConfig] = None,
        receiver_config: Optional[ReceiverConfig] = None,
    ):
        self.config = config
        self.radar = RadarProcessor(config, radar_config)
        self.receiver = CommReceiver(config, receiver_config)
        self.steering = SteeringMatrix.identity(config)
        self._frames_built = 0

    @property
    def feedback_path(self) -> Optional[Union[str, os.PathLike]]:
        return self.receiver.receiver_config.feedback_path

    def refresh_steering(self) -> SteeringMatrix:
        """Re-reads the feedback file. Identity steering, with a warning, when it is missing."""
        self.steering = load_steering(self.feedback_path, self.config)
        return self.steering

    def next_seed(self) -> int:
        """Scrambler seeds cycle through 1..127, one per DATA frame."""
        seed = self._frames_built % _SEED_SPACE + 1
        self._frames_built += 1
        return seed

    def build_frame(
        self, payload: Optional[bytes] = None, mcs: Optional[Mcs] = None, seed: Optional[int] = None
    ) -> FrameGrid:
        """A DATA frame for ``payload``, or an NDP sounding frame when it is None."""
        if payload is None:
            return assemble_frame(None, FrameKind.NDP, SteeringMatrix.identity(self.config), self.config)
        mcs = ifnone(mcs, self.config.mcs)
        stream = encode_payload(payload, mcs, ifnone(seed, self.next_seed()), self.config)
        return assemble_frame(stream, FrameKind.DATA, self.steering, self.config)

    def transmit(
        self, payloads: Sequence[Optional[bytes]], mcs: Optional[Mcs] = None, gap: Optional[int] = None
    ) -> TxBaseband:
        """Modulates one frame per payload (None for NDP) into a single stream.

        Args:
            gap: zero samples after every frame, two OFDM symbols by default

        """
        assert len(payloads) > 0, "nothing to transmit"
        gap = ifnone(gap, 2 * self.config.symbol_length)
        basebands = [ofdm_modulate(self.build_frame(p, mcs), self.config) for p in payloads]
        return TxBaseband.concatenate(basebands, gap=gap)

    def sense(self, tx: TxBaseband, scene: Scene, rng: Optional[np.random.Generator] = None) -> List[RadarResult]:
        """Simulates the reflections of ``tx`` and runs them through the radar processor."""
        rx = simulate_radar(tx, scene, self.config, rng)
        return self.radar.process_many(split_frames(rx, tx.frames))

    def communicate(
        self,
        tx: TxBaseband,
        distance: float,
        scene: Scene,
        rng: Optional[np.random.Generator] = None,
    ) -> Tuple[CommBaseband, List[DecodedPacket]]:
        stream = simulate_comm(tx, distance, scene, self.config, rng)
        return stream, self.receiver.receive(stream)

    def sound(self, distance: float, scene: Scene, rng: Optional[np.random.Generator] = None) -> SteeringMatrix:
        """Sends one NDP over the link and adopts the steering derived from its channel estimate.

        With a feedback path configured the estimate travels through the feedback file,
        otherwise it is taken straight from the receiver.

        """
        _, packets = self.communicate(self.transmit([None]), distance, scene, rng)
        ndp = [p for p in packets if p.kind == FrameKind.NDP]
        if not ndp:
            logger.warning("Sounding frame was not received, keeping the current steering")
            return self.steering
        if self.feedback_path:
            return self.refresh_steering()
        self.steering = compute_steering(ndp[-1].channel.h, self.config)
        return self.steering

    def loopback(
        self,
        payloads: Sequence[bytes],
        scene: Scene,
        distance: float,
        comm_scene: Optional[Scene] = None,
        mcs: Optional[Mcs] = None,
        seed: Optional[int] = None,
    ) -> LoopbackReport:
        """Transmits ``payloads`` once and runs the radar and the remote receiver on the same frames.

        Args:
            scene: radar scene
            distance: distance of the communication receiver, m
            comm_scene: scene of the communication link (noise, CFO, direction), ``scene`` by default
            seed: seeds the noise of both links, which draw from independent streams

        """
        tx = self.transmit(list(payloads), mcs)
        radar_seq, comm_seq = np.random.SeedSequence(seed).spawn(2)
        with ThreadPoolExecutor(max_workers=2) as executor:
            radar = executor.submit(self.sense, tx, scene, np.random.default_rng(radar_seq))
            comm = executor.submit(
                self.communicate, tx, distance, ifnone(comm_scene, scene), np.random.default_rng(comm_seq)
            )
            report = LoopbackReport(list(payloads), comm.result()[1], radar.result())
        logger.info(
            f"Loopback: {report.delivered}/{len(report.sent)} frames delivered,"
            f" mean SNR {report.mean_snr_db:.1f} dB, {sum(len(r.detections) for r in report.radar)} detections"
        )
        return report
