"""Stateful radar pipeline: estimation, background removal, imaging and detection."""

import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from mimo_jrc.config import RadarConfig, SystemConfig, derive_radar_axes
from mimo_jrc.frame import N_LTS, N_STS, FrameGrid, FrameKind, frame_layout
from mimo_jrc.radar.detection import Detection, cfar_scale, detect
from mimo_jrc.radar.estimation import MeasurementMatrix, estimate_radar_channel
from mimo_jrc.radar.imaging import RangeAngleImage, range_angle_image
from mimo_jrc.radar.si_removal import SiEstimate, remove_si, update_si
from mimo_jrc.rx.decoder import decode_header
from mimo_jrc.tx.ofdm import ofdm_demodulate
from mimo_jrc.tx.stream_encoder import frame_symbol_count
from mimo_jrc.utils import check_numpy, get_logger, ifnone

logger = get_logger(__name__)


class RadarResult(NamedTuple):
    measurement: MeasurementMatrix
    image: RangeAngleImage
    detections: List[Detection]


class RadarProcessor:
    """Turns the synchronously received reflections of own frames into images and detections.

    The background window is the only mutable state and is updated by the calling thread in
    frame order. Images of several frames may be formed on worker threads.

    Args:
        config: radio and imaging configuration
        radar_config: background window, noise floor and detector settings

    """

    def __init__(self, config: SystemConfig, radar_config: Optional[RadarConfig] = None):
        self.config = config
        self.radar_config = ifnone(radar_config, RadarConfig())
        self.axes = derive_radar_axes(config)
        self.cfar_scale = (
            cfar_scale(config, self.radar_config) if self.radar_config.detection_method == "ca-cfar" else None
        )
        self.si = SiEstimate(n_win=self.radar_config.si_window)
        self._lock = threading.Lock()
        self._frames_seen = 0

    @property
    def capturing(self) -> bool:
        return self.si.capturing

    def start_si_capture(self) -> None:
        """Starts a fresh background capture. Frames processed from now on fill the window."""
        with self._lock:
            self.si = SiEstimate(n_win=self.radar_config.si_window, capturing=True)
        logger.info(f"Self-interference capture started (window of {self.radar_config.si_window} frames)")

    def stop_si_capture(self) -> None:
        """Freezes the background estimate at its current value."""
        with self._lock:
            self.si.capturing = False
            if self.si.h_si is None:
                logger.warning("Self-interference capture stopped before any frame was captured")
            elif self.si.provisional:
                logger.warning(
                    f"Self-interference estimate is provisional: {len(self.si.window)} of {self.si.n_win} frames"
                )
            else:
                logger.info("Self-interference estimate frozen")

    def clear_si(self) -> None:
        with self._lock:
            self.si = SiEstimate(n_win=self.radar_config.si_window)

    def measure(self, rx, frame: FrameGrid, start: Optional[int] = None, frame_index: int = 0) -> MeasurementMatrix:
        """Demodulates one frame of ``rx`` at the known transmit timing and estimates the channel."""
        markers = getattr(rx, "frame_markers", [0])
        start = ifnone(start, markers[0] if markers else 0)
        grid = ofdm_demodulate(rx, self.config, n_symbols=frame.n_symbols, start=start)
        return estimate_radar_channel(
            grid, frame, self.config, threshold=self.radar_config.preamble_threshold, frame_index=frame_index
        )

    def _background(self, measurement: MeasurementMatrix) -> MeasurementMatrix:
        # subtract the estimate of the preceding frames, then let this frame enter the window
        with self._lock:
            target = remove_si(measurement, self.si)
            if self.si.capturing:
                self.si = update_si(self.si, measurement)
        return target

    def image(self, measurement: MeasurementMatrix) -> Tuple[RangeAngleImage, List[Detection]]:
        image = range_angle_image(
            measurement, self.config, noise_region_start=self.radar_config.noise_region_start, axes=self.axes
        )
        return image, detect(image, self.radar_config.detection_method, self.radar_config, self.cfar_scale)

    def process(
        self,
        rx,
        frame: FrameGrid,
        start: Optional[int] = None,
        frame_index: Optional[int] = None,
    ) -> RadarResult:
        frame_index = ifnone(frame_index, self._frames_seen)
        self._frames_seen = frame_index + 1
        target = self._background(self.measure(rx, frame, start, frame_index))
        image, detections = self.image(target)
        logger.debug(f"Frame {frame_index}: {len(detections)} detections")
        return RadarResult(target, image, detections)

    def process_many(self, frames: Iterable[Tuple[object, FrameGrid]]) -> List[RadarResult]:
        """Processes ``(rx, frame)`` pairs. Results come back in input order."""
        targets = []
        for rx, frame in frames:
            frame_index = self._frames_seen
            self._frames_seen += 1
            targets.append(self._background(self.measure(rx, frame, frame_index=frame_index)))
        with ThreadPoolExecutor(max_workers=max(1, self.radar_config.num_workers)) as executor:
            images = list(executor.map(self.image, targets))
        return [RadarResult(t, image, det) for t, (image, det) in zip(targets, images)]


def split_frames(rx, frames: Sequence[FrameGrid]) -> List[Tuple[object, FrameGrid]]:
    """Pairs every frame with a view of ``rx`` starting at its marker."""
    markers = getattr(rx, "frame_markers", [0])
    assert len(markers) == len(frames), "one marker per frame is required"
    return [(_FrameView(rx.samples, m), f) for m, f in zip(markers, frames)]


class _FrameView(NamedTuple):
    samples: object
    start: int

    @property
    def frame_markers(self) -> List[int]:
        return [self.start]


def recover_frames(samples, frame_markers: Sequence[int], cfg: SystemConfig) -> List[FrameGrid]:
    """Rebuilds the transmitted grids of a recorded TX stream from the headers of its frames."""
    x = np.atleast_2d(check_numpy(samples, dtype=complex))
    assert x.shape[0] == cfg.n_tx, f"expected {cfg.n_tx} TX chains, got {x.shape[0]}"
    frames = []
    for marker in frame_markers:
        header = ofdm_demodulate(x[:1], cfg, n_symbols=1, start=marker + (N_STS + N_LTS) * cfg.symbol_length)
        mcs, payload_len, kind = decode_header(header[0, 0, cfg.data_subcarriers])
        n_data = 0 if kind == FrameKind.NDP else frame_symbol_count(payload_len, mcs, cfg)
        layout = frame_layout(kind, n_data, cfg)
        grid = ofdm_demodulate(x, cfg, n_symbols=layout[-1].stop, start=marker)
        frames.append(
            FrameGrid(kind, layout, grid, None if kind == FrameKind.NDP else mcs, payload_len, "recorded")
        )
    return frames
