"""Top-level package for MIMO JRC."""

__version__ = "0.1.0"

from . import analysis, channel, coding, radar, rx, tx
from .channel import PointTarget, Scene, SiLeakage
from .config import Mcs, RadarConfig, ReceiverConfig, SystemConfig, load_config, save_config
from .frame import FrameGrid, FrameKind
from .ingest import PacketQueue, ingest_packets
from .jrc_transceiver import JrcTransceiver, LoopbackReport
from .utils import get_logger

logger = get_logger("mimo_jrc")

__all__ = [
    "JrcTransceiver",
    "LoopbackReport",
    "SystemConfig",
    "RadarConfig",
    "ReceiverConfig",
    "Mcs",
    "load_config",
    "save_config",
    "FrameGrid",
    "FrameKind",
    "Scene",
    "PointTarget",
    "SiLeakage",
    "PacketQueue",
    "ingest_packets",
    "analysis",
    "channel",
    "coding",
    "radar",
    "rx",
    "tx",
    "utils",
]
