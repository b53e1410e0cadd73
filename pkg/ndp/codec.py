"""
ICMPv6 wire codec for NS, NA and the key-exchange messages
Bit-exact encode/decode with the IPv6 pseudo-header checksum (RFC 4861 layout, code 1 = hashed Target)
"""

import struct
from dataclasses import dataclass
from enum import IntEnum
from ipaddress import IPv6Address
from typing import List, Union

from utils.addresses import format_mac
from utils.errors import (
    ChecksumError,
    MalformedMessageError,
    NdpEncodeError,
    UnsupportedMessageError,
)

TYPE_NEIGHBOR_SOLICITATION = 135
TYPE_NEIGHBOR_ADVERTISEMENT = 136
# ICMPv6 private experimentation code points (RFC 4443)
TYPE_KEX_INIT = 200
TYPE_KEX_RESP = 201

NEXT_HEADER_ICMPV6 = 58

OPT_SOURCE_LLA = 1
OPT_TARGET_LLA = 2

ND_MESSAGE_LEN = 32
KEX_HEADER_LEN = 6
MAX_PUBLIC_VALUE_LEN = 0xFFFF

NA_FLAG_ROUTER = 0x80
NA_FLAG_SOLICITED = 0x40
NA_FLAG_OVERRIDE = 0x20


class Mode(IntEnum):
    """Carried in the ICMPv6 code field of NS/NA"""
    STANDARD = 0
    HASHED = 1


@dataclass(frozen=True)
class NeighborSolicitation:
    mode: Mode
    target_field: bytes
    source_link_layer: bytes

    icmp_type = TYPE_NEIGHBOR_SOLICITATION


@dataclass(frozen=True)
class NeighborAdvertisement:
    mode: Mode
    target_field: bytes
    target_link_layer: bytes
    router: bool = False
    solicited: bool = True
    override: bool = False

    icmp_type = TYPE_NEIGHBOR_ADVERTISEMENT


@dataclass(frozen=True)
class KexInit:
    public_value: bytes

    icmp_type = TYPE_KEX_INIT

    @property
    def public_value_length(self) -> int:
        return len(self.public_value)

    @property
    def public_int(self) -> int:
        return int.from_bytes(self.public_value, "big")


@dataclass(frozen=True)
class KexResp:
    public_value: bytes

    icmp_type = TYPE_KEX_RESP

    @property
    def public_value_length(self) -> int:
        return len(self.public_value)

    @property
    def public_int(self) -> int:
        return int.from_bytes(self.public_value, "big")


NdpMessage = Union[NeighborSolicitation, NeighborAdvertisement, KexInit, KexResp]

TYPE_NAMES = {
    TYPE_NEIGHBOR_SOLICITATION: "ns",
    TYPE_NEIGHBOR_ADVERTISEMENT: "na",
    TYPE_KEX_INIT: "kex_init",
    TYPE_KEX_RESP: "kex_resp",
}


def message_code(message: NdpMessage) -> int:
    if isinstance(message, (NeighborSolicitation, NeighborAdvertisement)):
        return int(message.mode)
    return 0


def icmpv6_checksum(src_ip: IPv6Address, dst_ip: IPv6Address, payload: bytes) -> int:
    """One's-complement of the one's-complement sum over pseudo-header + payload"""
    pseudo = src_ip.packed + dst_ip.packed + struct.pack("!I3xB", len(payload), NEXT_HEADER_ICMPV6)
    data = pseudo + payload
    if len(data) % 2:
        data += b"\x00"

    total = sum(struct.unpack(f"!{len(data) // 2}H", data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def _check_field(name: str, value: bytes, length: int):
    if not isinstance(value, (bytes, bytearray)) or len(value) != length:
        raise NdpEncodeError(f"{name} must be {length} bytes")


def _body(message: NdpMessage) -> bytes:
    """Message image with a zero checksum"""
    if isinstance(message, NeighborSolicitation):
        _check_field("target_field", message.target_field, 16)
        _check_field("source_link_layer", message.source_link_layer, 6)
        return (
            struct.pack("!BBH4x", TYPE_NEIGHBOR_SOLICITATION, int(message.mode), 0)
            + bytes(message.target_field)
            + struct.pack("!BB", OPT_SOURCE_LLA, 1)
            + bytes(message.source_link_layer)
        )

    if isinstance(message, NeighborAdvertisement):
        _check_field("target_field", message.target_field, 16)
        _check_field("target_link_layer", message.target_link_layer, 6)
        flags = (
            (NA_FLAG_ROUTER if message.router else 0)
            | (NA_FLAG_SOLICITED if message.solicited else 0)
            | (NA_FLAG_OVERRIDE if message.override else 0)
        )
        return (
            struct.pack("!BBHB3x", TYPE_NEIGHBOR_ADVERTISEMENT, int(message.mode), 0, flags)
            + bytes(message.target_field)
            + struct.pack("!BB", OPT_TARGET_LLA, 1)
            + bytes(message.target_link_layer)
        )

    if isinstance(message, (KexInit, KexResp)):
        if len(message.public_value) > MAX_PUBLIC_VALUE_LEN:
            raise NdpEncodeError(
                f"Public value of {len(message.public_value)} bytes exceeds the 16-bit length field"
            )
        return (
            struct.pack("!BBHH", message.icmp_type, 0, 0, len(message.public_value))
            + bytes(message.public_value)
        )

    raise NdpEncodeError(f"Cannot encode {type(message).__name__}")


def encode(message: NdpMessage, src_ip: IPv6Address, dst_ip: IPv6Address) -> bytes:
    image = bytearray(_body(message))
    struct.pack_into("!H", image, 2, icmpv6_checksum(src_ip, dst_ip, bytes(image)))
    return bytes(image)


def _parse_option(data: bytes, expected_type: int) -> bytes:
    opt_type, opt_len = data[24], data[25]
    if opt_type != expected_type or opt_len != 1:
        raise MalformedMessageError(
            f"Expected link-layer option type {expected_type} length 1, got type {opt_type} length {opt_len}"
        )
    return bytes(data[26:32])


def decode(data: bytes, src_ip: IPv6Address, dst_ip: IPv6Address) -> NdpMessage:
    """
    Parse and verify an ICMPv6 image.

    Raises MalformedMessageError, UnsupportedMessageError or ChecksumError;
    nothing else escapes for any byte input.
    """
    data = bytes(data)
    if len(data) < 4:
        raise MalformedMessageError(f"ICMPv6 header needs 4 bytes, got {len(data)}")

    icmp_type, code = data[0], data[1]
    if icmp_type in (TYPE_NEIGHBOR_SOLICITATION, TYPE_NEIGHBOR_ADVERTISEMENT):
        if code not in (Mode.STANDARD, Mode.HASHED):
            raise UnsupportedMessageError(f"Unsupported code {code} for type {icmp_type}")
        if len(data) != ND_MESSAGE_LEN:
            raise MalformedMessageError(
                f"Type {icmp_type} image must be {ND_MESSAGE_LEN} bytes, got {len(data)}"
            )
    elif icmp_type in (TYPE_KEX_INIT, TYPE_KEX_RESP):
        if code != 0:
            raise UnsupportedMessageError(f"Unsupported code {code} for type {icmp_type}")
        if len(data) < KEX_HEADER_LEN:
            raise MalformedMessageError(f"Key-exchange header truncated at {len(data)} bytes")
        (declared,) = struct.unpack_from("!H", data, 4)
        if len(data) != KEX_HEADER_LEN + declared:
            raise MalformedMessageError(
                f"Key-exchange body declares {declared} bytes but carries {len(data) - KEX_HEADER_LEN}"
            )
    else:
        raise UnsupportedMessageError(f"Unsupported ICMPv6 type {icmp_type}")

    if _checksum_fails(src_ip, dst_ip, data):
        raise ChecksumError(f"Checksum mismatch on type {icmp_type} message")

    if icmp_type == TYPE_NEIGHBOR_SOLICITATION:
        return NeighborSolicitation(
            mode=Mode(code),
            target_field=data[8:24],
            source_link_layer=_parse_option(data, OPT_SOURCE_LLA),
        )

    if icmp_type == TYPE_NEIGHBOR_ADVERTISEMENT:
        flags = data[4]
        return NeighborAdvertisement(
            mode=Mode(code),
            target_field=data[8:24],
            target_link_layer=_parse_option(data, OPT_TARGET_LLA),
            router=bool(flags & NA_FLAG_ROUTER),
            solicited=bool(flags & NA_FLAG_SOLICITED),
            override=bool(flags & NA_FLAG_OVERRIDE),
        )

    cls = KexInit if icmp_type == TYPE_KEX_INIT else KexResp
    return cls(public_value=data[KEX_HEADER_LEN:])


def _checksum_fails(src_ip: IPv6Address, dst_ip: IPv6Address, image: bytes) -> bool:
    # A correct image sums to 0xFFFF, so its complement is zero
    return icmpv6_checksum(src_ip, dst_ip, image) != 0


def hexdump(image: bytes) -> str:
    """One line per field of an encoded image, for debugging and golden tests"""
    lines: List[str] = []

    def field(name: str, raw: bytes, note: str = ""):
        lines.append(f"{name:<18} {raw.hex(' '):<48} {note}".rstrip())

    if len(image) < 4:
        field("truncated", image)
        return "\n".join(lines)

    icmp_type = image[0]
    field("type", image[0:1], f"{icmp_type} ({TYPE_NAMES.get(icmp_type, 'unknown')})")
    field("code", image[1:2], str(image[1]))
    field("checksum", image[2:4], f"0x{image[2] << 8 | image[3]:04x}")

    if icmp_type in (TYPE_NEIGHBOR_SOLICITATION, TYPE_NEIGHBOR_ADVERTISEMENT) and len(image) >= ND_MESSAGE_LEN:
        if icmp_type == TYPE_NEIGHBOR_ADVERTISEMENT:
            field("flags", image[4:5], f"R={image[4] >> 7 & 1} S={image[4] >> 6 & 1} O={image[4] >> 5 & 1}")
            field("reserved", image[5:8])
        else:
            field("reserved", image[4:8])
        target = image[8:24]
        note = str(IPv6Address(target)) if image[1] == Mode.STANDARD else "hashed"
        field("target", target, note)
        field("option", image[24:26], f"type={image[24]} len={image[25]}")
        field("link_layer", image[26:32], format_mac(image[26:32]))
    elif icmp_type in (TYPE_KEX_INIT, TYPE_KEX_RESP) and len(image) >= KEX_HEADER_LEN:
        field("length", image[4:6], str(image[4] << 8 | image[5]))
        field("public_value", image[6:])
    else:
        field("body", image[4:])

    return "\n".join(lines)
