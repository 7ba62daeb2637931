"""On-air frame codec.

Layout (all multi-byte integers big-endian)::

    preamble(2) | sync(4) | length(2) | header(9) | payload(0..991) | crc(4)

``length`` counts header + payload. The CRC covers length, header and
payload; preamble and sync are excluded.
"""
from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field

HEADER_LEN = 9
MAX_DECLARED_LEN = 1000
MAX_PAYLOAD = MAX_DECLARED_LEN - HEADER_LEN
PREFIX_LEN = 2 + 4 + 2
CRC_LEN = 4
OVERHEAD = PREFIX_LEN + HEADER_LEN + CRC_LEN  # 21 bytes around the user payload

_HEADER = struct.Struct(">BII")

SEQ_RESET_BIT = 0x80
SHIFT_REQ_BIT = 0x40
SHIFT_ACK_BIT = 0x20
RESERVED_MASK = 0x1F


class FrameError(ValueError):
    pass


class PayloadTooLong(FrameError):
    pass


class SyncMismatch(FrameError):
    pass


class LengthOutOfRange(FrameError):
    pass


class CrcMismatch(FrameError):
    pass


@dataclass(frozen=True)
class PayloadHeader:
    seq_reset: bool = False
    mod_shift_req: bool = False
    mod_shift_ack: bool = False
    frame_seq: int = 0
    ack_seq: int = 0
    # decoded as received; always written as zero
    reserved: int = 0

    def __post_init__(self):
        if not 0 <= self.frame_seq <= 0xFFFFFFFF or not 0 <= self.ack_seq <= 0xFFFFFFFF:
            raise ValueError("sequence numbers are unsigned 32-bit")
        if not 0 <= self.reserved <= RESERVED_MASK:
            raise ValueError("reserved field is 5 bits")

    def encode(self) -> bytes:
        control = (
            (SEQ_RESET_BIT if self.seq_reset else 0)
            | (SHIFT_REQ_BIT if self.mod_shift_req else 0)
            | (SHIFT_ACK_BIT if self.mod_shift_ack else 0)
        )
        return _HEADER.pack(control, self.frame_seq, self.ack_seq)

    @classmethod
    def decode(cls, raw: bytes) -> "PayloadHeader":
        if len(raw) != HEADER_LEN:
            raise LengthOutOfRange(f"header must be {HEADER_LEN} bytes, got {len(raw)}")
        control, frame_seq, ack_seq = _HEADER.unpack(raw)
        return cls(
            seq_reset=bool(control & SEQ_RESET_BIT),
            mod_shift_req=bool(control & SHIFT_REQ_BIT),
            mod_shift_ack=bool(control & SHIFT_ACK_BIT),
            frame_seq=frame_seq,
            ack_seq=ack_seq,
            reserved=control & RESERVED_MASK,
        )


@dataclass(frozen=True)
class Frame:
    header: PayloadHeader = field(default_factory=PayloadHeader)
    payload: bytes = b""

    @property
    def declared_payload_length(self) -> int:
        return HEADER_LEN + len(self.payload)

    @property
    def encoded_length(self) -> int:
        return OVERHEAD + len(self.payload)

    @property
    def is_pure_ack(self) -> bool:
        return not self.payload


@dataclass(frozen=True)
class WireConfig:
    preamble: bytes = b"\xaa\xaa"
    sync_word: bytes = b"\x93\x0b\x51\xde"

    def __post_init__(self):
        if len(self.preamble) != 2 or len(self.sync_word) != 4:
            raise ValueError("preamble is 2 bytes and sync word is 4 bytes")


DEFAULT_WIRE = WireConfig()


def crc32(data: bytes) -> int:
    """CRC-32 (poly 0x04C11DB7, reflected, init and xorout 0xFFFFFFFF)."""
    return zlib.crc32(data) & 0xFFFFFFFF


def encoded_length(payload_len: int) -> int:
    return OVERHEAD + payload_len


def encode_frame(frame: Frame, cfg: WireConfig = DEFAULT_WIRE) -> bytes:
    if len(frame.payload) > MAX_PAYLOAD:
        raise PayloadTooLong(f"payload of {len(frame.payload)} bytes exceeds {MAX_PAYLOAD}")
    body = struct.pack(">H", frame.declared_payload_length) + frame.header.encode() + frame.payload
    return cfg.preamble + cfg.sync_word + body + struct.pack(">I", crc32(body))


def decode_frame(data: bytes, cfg: WireConfig = DEFAULT_WIRE) -> Frame:
    """Parse and verify one encoded frame.

    Raises SyncMismatch, LengthOutOfRange or CrcMismatch; never returns a
    frame whose CRC did not verify.
    """
    data = bytes(data)
    if len(data) < PREFIX_LEN:
        raise LengthOutOfRange(f"{len(data)} bytes is shorter than the frame prefix")
    if data[2:6] != cfg.sync_word:
        raise SyncMismatch(f"sync word {data[2:6].hex()} != {cfg.sync_word.hex()}")
    (declared,) = struct.unpack_from(">H", data, 6)
    if declared < HEADER_LEN or declared > MAX_DECLARED_LEN:
        raise LengthOutOfRange(f"declared length {declared} outside [{HEADER_LEN}, {MAX_DECLARED_LEN}]")
    if len(data) != PREFIX_LEN + declared + CRC_LEN:
        raise LengthOutOfRange(
            f"declared length {declared} implies {PREFIX_LEN + declared + CRC_LEN} bytes, got {len(data)}"
        )
    body = data[6 : PREFIX_LEN + declared]
    (received_crc,) = struct.unpack_from(">I", data, PREFIX_LEN + declared)
    if crc32(body) != received_crc:
        raise CrcMismatch("CRC check failed")
    header = PayloadHeader.decode(body[2 : 2 + HEADER_LEN])
    return Frame(header=header, payload=body[2 + HEADER_LEN :])
