from .decoder import decode_header, decode_payload, symbol_metrics
from .equalizer import (
    ChannelEstimate,
    Equalized,
    common_phase,
    equalize,
    estimate_snr,
    evm,
    ls_estimate,
    lts_noise_variance,
    mimo_ls_estimate,
    sta_update,
)
from .receiver import CommReceiver, DecodedPacket
from .sync import (
    SyncState,
    coarse_cfo,
    dc_block,
    delay_correlate,
    derotate,
    detect_frame,
    estimate_cfo,
    find_plateaus,
    fine_cfo,
    fine_timing,
)

__all__ = [
    "SyncState",
    "dc_block",
    "delay_correlate",
    "find_plateaus",
    "detect_frame",
    "coarse_cfo",
    "fine_timing",
    "fine_cfo",
    "derotate",
    "estimate_cfo",
    "ChannelEstimate",
    "Equalized",
    "ls_estimate",
    "lts_noise_variance",
    "mimo_ls_estimate",
    "sta_update",
    "common_phase",
    "equalize",
    "estimate_snr",
    "evm",
    "symbol_metrics",
    "decode_header",
    "decode_payload",
    "CommReceiver",
    "DecodedPacket",
]
