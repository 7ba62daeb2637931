import pytest
from hypothesis import given
from hypothesis import strategies as st

from crlink.wire import (
    DEFAULT_WIRE,
    MAX_PAYLOAD,
    OVERHEAD,
    CrcMismatch,
    Frame,
    FrameError,
    LengthOutOfRange,
    PayloadHeader,
    PayloadTooLong,
    SyncMismatch,
    WireConfig,
    crc32,
    decode_frame,
    encode_frame,
    encoded_length,
)


def bitwise_crc32(data: bytes) -> int:
    # reflected CRC-32, poly 0x04C11DB7 (reversed 0xEDB88320), init/xorout all ones
    crc = 0xFFFFFFFF
    for byte in data:
        crc ^= byte
        for _ in range(8):
            crc = (crc >> 1) ^ (0xEDB88320 if crc & 1 else 0)
    return crc ^ 0xFFFFFFFF


def hdr(seq=0, ack=0xFFFFFFFF, reset=False, req=False, sack=False):
    return PayloadHeader(reset, req, sack, seq, ack)


def test_crc_check_value():
    assert crc32(b"123456789") == 0xCBF43926
    assert bitwise_crc32(b"123456789") == 0xCBF43926


@given(st.binary(max_size=300))
def test_crc_matches_bitwise_oracle(data):
    assert crc32(data) == bitwise_crc32(data)


def test_layout_of_known_frame():
    raw = encode_frame(Frame(hdr(seq=1, ack=2, reset=True), b"\x55"))
    assert raw[:2] == b"\xaa\xaa"
    assert raw[2:6] == bytes.fromhex("930b51de")
    assert raw[6:8] == (10).to_bytes(2, "big")
    assert raw[8] == 0x80
    assert raw[9:13] == (1).to_bytes(4, "big")
    assert raw[13:17] == (2).to_bytes(4, "big")
    assert raw[17:18] == b"\x55"
    assert raw[18:] == bitwise_crc32(raw[6:18]).to_bytes(4, "big")
    assert len(raw) == OVERHEAD + 1


def test_overhead_and_full_frame_size():
    assert OVERHEAD == 21
    assert encoded_length(MAX_PAYLOAD) == 1012
    assert encoded_length(0) == 21


def test_payload_too_long():
    with pytest.raises(PayloadTooLong):
        encode_frame(Frame(hdr(), bytes(MAX_PAYLOAD + 1)))


def test_flag_bits_and_reserved_written_zero():
    h = PayloadHeader(False, True, True, 7, 8, reserved=0x1F)
    raw = encode_frame(Frame(h, b""))
    assert raw[8] == 0x60
    back = decode_frame(raw).header
    assert back.mod_shift_req and back.mod_shift_ack and not back.seq_reset
    assert back.reserved == 0


def test_pure_ack_round_trip():
    f = Frame(hdr(ack=41), b"")
    assert f.is_pure_ack
    assert decode_frame(encode_frame(f)) == f


def test_sync_mismatch():
    raw = bytearray(encode_frame(Frame(hdr(), b"abc")))
    raw[3] ^= 0x01
    with pytest.raises(SyncMismatch):
        decode_frame(bytes(raw))


@pytest.mark.parametrize("declared", [0, 8, 1001, 0xFFFF])
def test_declared_length_out_of_range(declared):
    raw = bytearray(encode_frame(Frame(hdr(), b"abc")))
    raw[6:8] = declared.to_bytes(2, "big")
    with pytest.raises(LengthOutOfRange):
        decode_frame(bytes(raw))


def test_truncated_frame_is_length_error():
    raw = encode_frame(Frame(hdr(), b"abcdef"))
    with pytest.raises(LengthOutOfRange):
        decode_frame(raw[:-1])
    with pytest.raises(LengthOutOfRange):
        decode_frame(raw[:5])


def test_crc_mismatch():
    raw = bytearray(encode_frame(Frame(hdr(), b"abcdef")))
    raw[-1] ^= 0x80
    with pytest.raises(CrcMismatch):
        decode_frame(bytes(raw))


def test_custom_wire_config():
    cfg = WireConfig(preamble=b"\x55\x55", sync_word=bytes.fromhex("12345678"))
    f = Frame(hdr(seq=3), b"xyz")
    raw = encode_frame(f, cfg)
    assert decode_frame(raw, cfg) == f
    with pytest.raises(SyncMismatch):
        decode_frame(raw, DEFAULT_WIRE)


frames = st.builds(
    lambda reset, req, sack, seq, ack, payload: Frame(PayloadHeader(reset, req, sack, seq, ack), payload),
    st.booleans(),
    st.booleans(),
    st.booleans(),
    st.integers(0, 2**32 - 1),
    st.integers(0, 2**32 - 1),
    st.binary(max_size=MAX_PAYLOAD),
)


@given(frames)
def test_round_trip_property(frame):
    raw = encode_frame(frame)
    assert len(raw) == frame.encoded_length
    assert decode_frame(raw) == frame


def test_every_single_bit_flip_is_rejected():
    raw = encode_frame(Frame(hdr(seq=5, ack=4), b"\x00\xff\x10"))
    assert len(raw) > 16
    for bit in range(16, len(raw) * 8):
        bad = bytearray(raw)
        bad[bit // 8] ^= 1 << (bit % 8)
        with pytest.raises(FrameError):
            decode_frame(bytes(bad))
