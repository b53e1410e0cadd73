"""
Address helpers for IPv6 and 48-bit MAC values
"""

from ipaddress import IPv6Address
from typing import Union

from utils.errors import AddressError

ALL_NODES_IP = IPv6Address("ff02::1")
ALL_NODES_MAC = bytes.fromhex("333300000001")


def parse_mac(text: Union[str, bytes]) -> bytes:
    """Parse 'aa:bb:cc:dd:ee:ff' (or '-' separated) into 6 raw bytes"""
    if isinstance(text, (bytes, bytearray)):
        if len(text) != 6:
            raise AddressError(f"MAC must be 6 bytes, got {len(text)}")
        return bytes(text)

    parts = text.replace("-", ":").split(":")
    if len(parts) != 6 or any(len(p) != 2 for p in parts):
        raise AddressError(f"Invalid MAC address: {text!r}")
    try:
        return bytes(int(p, 16) for p in parts)
    except ValueError:
        raise AddressError(f"Invalid MAC address: {text!r}")


def format_mac(raw: bytes) -> str:
    return ":".join(f"{b:02x}" for b in raw)


def solicited_node_mac(ip: IPv6Address) -> bytes:
    """Link-layer address of the solicited-node group ff02::1:ffXX:XXXX for ip"""
    return bytes.fromhex("3333ff") + ip.packed[-3:]