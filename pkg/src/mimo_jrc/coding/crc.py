"""CRC-32 (IEEE 802.3) framing of payloads."""

import zlib

# CRC-32 over a message followed by its own little-endian CRC
CRC32_RESIDUE = 0x2144DF1C


def crc32(data: bytes) -> int:
    return zlib.crc32(bytes(data)) & 0xFFFFFFFF


def crc32_append(payload: bytes) -> bytes:
    """Returns ``payload`` followed by its 4-byte CRC-32, least significant byte first."""
    assert len(payload) >= 1, "payload must contain at least one byte"
    return bytes(payload) + crc32(payload).to_bytes(4, "little")


def crc_check(data: bytes) -> bool:
    """Residue check of a CRC-framed message."""
    return len(data) > 4 and crc32(data) == CRC32_RESIDUE
