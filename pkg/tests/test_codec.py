import random
import struct
from ipaddress import IPv6Address
from pathlib import Path

import pytest

from ndp.codec import (
    KexInit,
    KexResp,
    Mode,
    NeighborAdvertisement,
    NeighborSolicitation,
    decode,
    encode,
    hexdump,
    icmpv6_checksum,
)
from utils.errors import (
    ChecksumError,
    MalformedMessageError,
    NdpDecodeError,
    NdpEncodeError,
    UnsupportedMessageError,
)

ALICE = IPv6Address("fe80::1")
BOB = IPv6Address("fe80::2")
ALL_NODES = IPv6Address("ff02::1")
ALICE_MAC = bytes.fromhex("020000000001")
BOB_MAC = bytes.fromhex("020000000002")
GOLDEN_DIR = Path(__file__).parent / "golden"


def ones_complement_sum(src: IPv6Address, dst: IPv6Address, image: bytes) -> int:
    data = src.packed + dst.packed + struct.pack("!IxxxB", len(image), 58) + image
    if len(data) % 2:
        data += b"\x00"
    total = 0
    for i in range(0, len(data), 2):
        total += data[i] << 8 | data[i + 1]
        total = (total & 0xFFFF) + (total >> 16)
    return total


def random_message(rng: random.Random):
    kind = rng.randrange(4)
    if kind == 0:
        return NeighborSolicitation(Mode(rng.randrange(2)), rng.randbytes(16), rng.randbytes(6))
    if kind == 1:
        return NeighborAdvertisement(
            Mode(rng.randrange(2)),
            rng.randbytes(16),
            rng.randbytes(6),
            router=rng.random() < 0.5,
            solicited=rng.random() < 0.5,
            override=rng.random() < 0.5,
        )
    cls = KexInit if kind == 2 else KexResp
    return cls(rng.randbytes(rng.randrange(0, 300)))


def test_standard_ns_layout():
    image = encode(NeighborSolicitation(Mode.STANDARD, BOB.packed, ALICE_MAC), ALICE, ALL_NODES)
    assert len(image) == 32
    assert image[0] == 135 and image[1] == 0
    assert image[4:8] == b"\x00" * 4
    assert image[8:24] == BOB.packed
    assert image[24:26] == b"\x01\x01"
    assert image[26:32] == ALICE_MAC
    assert decode(image, ALICE, ALL_NODES) == NeighborSolicitation(Mode.STANDARD, BOB.packed, ALICE_MAC)


def test_hashed_na_layout():
    target = bytes(range(16))
    image = encode(NeighborAdvertisement(Mode.HASHED, target, BOB_MAC, solicited=True), BOB, ALICE)
    assert image[0] == 136 and image[1] == 1
    assert image[4] == 0x40
    assert image[8:24] == target
    assert image[24:26] == b"\x02\x01"
    assert image[26:32] == BOB_MAC


def test_na_flags():
    message = NeighborAdvertisement(Mode.STANDARD, BOB.packed, BOB_MAC, router=True, solicited=True, override=True)
    image = encode(message, BOB, ALICE)
    assert image[4] == 0xE0
    assert decode(image, BOB, ALICE) == message


def test_kex_layout():
    image = encode(KexInit(b"\x08"), ALICE, BOB)
    assert image[0] == 200 and image[1] == 0
    assert image[4:6] == b"\x00\x01"
    assert image[6:] == b"\x08"
    decoded = decode(image, ALICE, BOB)
    assert isinstance(decoded, KexInit)
    assert decoded.public_int == 8
    assert decode(encode(KexResp(b"\x13"), BOB, ALICE), BOB, ALICE) == KexResp(b"\x13")


def test_checksum_known_value():
    loopback = IPv6Address("::1")
    assert icmpv6_checksum(loopback, loopback, b"\x00\x00") == 0xFFC1


def test_checksum_pads_odd_length():
    loopback = IPv6Address("::1")
    assert icmpv6_checksum(loopback, loopback, b"\x01") == 0xFEC2


def test_round_trip_fuzzed_messages():
    rng = random.Random(1)
    for _ in range(1000):
        message = random_message(rng)
        src, dst = IPv6Address(rng.getrandbits(128)), IPv6Address(rng.getrandbits(128))
        image = encode(message, src, dst)
        assert decode(image, src, dst) == message
        assert ones_complement_sum(src, dst, image) == 0xFFFF


def test_random_bytes_are_classified():
    rng = random.Random(2)
    for _ in range(10000):
        data = bytearray(rng.randbytes(rng.randrange(0, 64)))
        if data and rng.random() < 0.7:
            data[0] = rng.choice([135, 136, 200, 201])
        if len(data) > 1 and rng.random() < 0.5:
            data[1] = rng.choice([0, 1])
        try:
            decode(bytes(data), ALICE, BOB)
        except NdpDecodeError:
            pass


def test_byte_flips_break_checksum():
    image = encode(NeighborSolicitation(Mode.HASHED, bytes(16), ALICE_MAC), ALICE, ALL_NODES)
    for position in range(2, 32):
        corrupted = bytearray(image)
        corrupted[position] ^= 0xFF
        with pytest.raises(ChecksumError):
            decode(bytes(corrupted), ALICE, ALL_NODES)


def test_wrong_addresses_break_checksum():
    image = encode(NeighborSolicitation(Mode.STANDARD, BOB.packed, ALICE_MAC), ALICE, ALL_NODES)
    with pytest.raises(ChecksumError):
        decode(image, BOB, ALL_NODES)


def test_truncated_ns_is_malformed():
    image = encode(NeighborSolicitation(Mode.STANDARD, BOB.packed, ALICE_MAC), ALICE, ALL_NODES)
    with pytest.raises(MalformedMessageError):
        decode(image[:31], ALICE, ALL_NODES)
    with pytest.raises(MalformedMessageError):
        decode(image[:3], ALICE, ALL_NODES)


def test_kex_length_mismatch_is_malformed():
    image = encode(KexInit(b"\x01\x02\x03"), ALICE, BOB)
    with pytest.raises(MalformedMessageError):
        decode(image[:-1], ALICE, BOB)
    with pytest.raises(MalformedMessageError):
        decode(image[:5], ALICE, BOB)


def test_unknown_type_and_code():
    with pytest.raises(UnsupportedMessageError):
        decode(bytes([128, 0, 0, 0]), ALICE, BOB)
    image = bytearray(encode(NeighborSolicitation(Mode.STANDARD, BOB.packed, ALICE_MAC), ALICE, ALL_NODES))
    image[1] = 2
    with pytest.raises(UnsupportedMessageError):
        decode(bytes(image), ALICE, ALL_NODES)


def test_wrong_option_type_is_malformed():
    image = bytearray(encode(NeighborSolicitation(Mode.STANDARD, BOB.packed, ALICE_MAC), ALICE, ALL_NODES))
    image[24] = 2
    image[2:4] = b"\x00\x00"
    image[2:4] = icmpv6_checksum(ALICE, ALL_NODES, bytes(image)).to_bytes(2, "big")
    with pytest.raises(MalformedMessageError):
        decode(bytes(image), ALICE, ALL_NODES)


def test_reserved_bits_ignored():
    image = bytearray(encode(NeighborSolicitation(Mode.STANDARD, BOB.packed, ALICE_MAC), ALICE, ALL_NODES))
    image[5] = 0x7F
    image[2:4] = b"\x00\x00"
    image[2:4] = icmpv6_checksum(ALICE, ALL_NODES, bytes(image)).to_bytes(2, "big")
    assert decode(bytes(image), ALICE, ALL_NODES).target_field == BOB.packed


def test_encode_rejects_bad_fields():
    with pytest.raises(NdpEncodeError):
        encode(NeighborSolicitation(Mode.STANDARD, b"\x00" * 15, ALICE_MAC), ALICE, ALL_NODES)
    with pytest.raises(NdpEncodeError):
        encode(KexInit(b"\x00" * 0x10000), ALICE, BOB)


def test_matches_scapy_wire_image():
    scapy = pytest.importorskip("scapy.all")

    ns = scapy.IPv6(src=str(ALICE), dst=str(ALL_NODES)) / scapy.ICMPv6ND_NS(tgt=str(BOB)) / scapy.ICMPv6NDOptSrcLLAddr(
        lladdr="02:00:00:00:00:01"
    )
    ours = encode(NeighborSolicitation(Mode.STANDARD, BOB.packed, ALICE_MAC), ALICE, ALL_NODES)
    assert bytes(ns)[40:] == ours

    na = scapy.IPv6(src=str(BOB), dst=str(ALICE)) / scapy.ICMPv6ND_NA(
        tgt=str(BOB), R=0, S=1, O=0
    ) / scapy.ICMPv6NDOptDstLLAddr(lladdr="02:00:00:00:00:02")
    ours = encode(NeighborAdvertisement(Mode.STANDARD, BOB.packed, BOB_MAC, solicited=True), BOB, ALICE)
    assert bytes(na)[40:] == ours


@pytest.mark.parametrize(
    "message,dst,golden",
    [
        (NeighborSolicitation(Mode.STANDARD, BOB.packed, ALICE_MAC), ALL_NODES, "ns_standard.txt"),
        (KexInit(b"\x08"), BOB, "kex_init.txt"),
    ],
)
def test_hexdump_matches_golden(message, dst, golden):
    expected = (GOLDEN_DIR / golden).read_text(encoding="utf-8").rstrip("\n")
    assert hexdump(encode(message, ALICE, dst)) == expected


def test_hexdump_lists_fields():
    image = encode(NeighborSolicitation(Mode.STANDARD, BOB.packed, ALICE_MAC), ALICE, ALL_NODES)
    dump = hexdump(image)
    assert "135 (ns)" in dump
    assert "fe80::2" in dump
    assert "02:00:00:00:00:01" in dump
    assert "hashed" in hexdump(encode(NeighborSolicitation(Mode.HASHED, bytes(16), ALICE_MAC), ALICE, ALL_NODES))
    assert hexdump(b"\x01").startswith("truncated")
