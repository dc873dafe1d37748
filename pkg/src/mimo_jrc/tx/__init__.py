from .ofdm import TxBaseband, ofdm_demodulate, ofdm_modulate
from .precoder import SteeringMatrix, assemble_frame, compute_steering, load_steering, ofdm_symbol
from .stream_encoder import (
    HEADER_MCS,
    EncodedStream,
    build_header,
    encode_payload,
    frame_symbol_count,
    header_fields,
    parse_header,
)

__all__ = [
    "EncodedStream",
    "encode_payload",
    "build_header",
    "header_fields",
    "parse_header",
    "frame_symbol_count",
    "HEADER_MCS",
    "SteeringMatrix",
    "compute_steering",
    "load_steering",
    "assemble_frame",
    "ofdm_symbol",
    "TxBaseband",
    "ofdm_modulate",
    "ofdm_demodulate",
]
