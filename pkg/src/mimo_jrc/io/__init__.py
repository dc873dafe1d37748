from .detection_log import detections_frame, read_detection_log, write_detection_log
from .feedback import read_feedback, write_feedback
from .image_file import ImageGrid, read_image, write_image, write_image_db
from .iq_file import IqSidecar, chain_path, read_iq, read_iq_chains, write_iq, write_iq_chains

__all__ = [
    "IqSidecar",
    "write_iq",
    "read_iq",
    "write_iq_chains",
    "read_iq_chains",
    "chain_path",
    "write_feedback",
    "read_feedback",
    "ImageGrid",
    "write_image",
    "write_image_db",
    "read_image",
    "write_detection_log",
    "read_detection_log",
    "detections_frame",
]
