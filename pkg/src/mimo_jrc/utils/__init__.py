from .exceptions import (
    ConfigError,
    FeedbackError,
    FrameError,
    HeaderError,
    IqFormatError,
    JrcError,
    SceneError,
)
from .logger import get_logger, set_log_level
from .python_utils import (
    EPS,
    bits_to_bytes,
    bytes_to_bits,
    check_numpy,
    db2pow,
    dump_yaml,
    generate_doc_dataclass,
    ifnone,
    pow2db,
    read_yaml,
)

__all__ = [
    "get_logger",
    "set_log_level",
    "ifnone",
    "generate_doc_dataclass",
    "check_numpy",
    "pow2db",
    "db2pow",
    "read_yaml",
    "dump_yaml",
    "bytes_to_bits",
    "bits_to_bytes",
    "EPS",
    "JrcError",
    "ConfigError",
    "FrameError",
    "HeaderError",
    "SceneError",
    "IqFormatError",
    "FeedbackError",
]
