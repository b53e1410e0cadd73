"""
Hashed Target field
HMAC-SHA-256 of the 16-byte target address under the pairwise key, truncated to 128 bits
"""

import hashlib
import hmac
from dataclasses import dataclass
from ipaddress import IPv6Address
from typing import Dict, Mapping, Optional

from utils.errors import HashedTargetError, HashKeyError

TARGET_FIELD_LEN = 16
KEY_LEN = 32


@dataclass(frozen=True)
class HashedTarget:
    bytes16: bytes

    def __post_init__(self):
        if len(self.bytes16) != TARGET_FIELD_LEN:
            raise HashedTargetError(f"Hashed target must be 16 bytes, got {len(self.bytes16)}")

    def hex(self) -> str:
        return self.bytes16.hex()


def hmac_sha256(key: bytes, data: bytes) -> bytes:
    """Full 32-byte HMAC-SHA-256 (any key length)"""
    return hmac.new(key, data, hashlib.sha256).digest()


def _check_key(key: bytes):
    if len(key) != KEY_LEN:
        raise HashKeyError(f"Pairwise HMAC key must be {KEY_LEN} bytes, got {len(key)}")


def hash_target(key: bytes, target: IPv6Address) -> HashedTarget:
    _check_key(key)
    return HashedTarget(hmac_sha256(key, target.packed)[:TARGET_FIELD_LEN])


def verify_target(
    key: bytes, own_address: IPv6Address, received: HashedTarget, expected: Optional[HashedTarget] = None
) -> bool:
    """
    Constant-time comparison of the received Target against our own hash.
    `expected` is the precomputed hash_target(key, own_address), if the caller holds one.
    """
    _check_key(key)
    if expected is None:
        expected = hash_target(key, own_address)
    return hmac.compare_digest(expected.bytes16, received.bytes16)


def precompute_self_hashes(
    own_address: IPv6Address, key_table: Mapping[IPv6Address, bytes]
) -> Dict[IPv6Address, HashedTarget]:
    """Hash of our own address under every peer key, keyed by peer"""
    return {peer: hash_target(key, own_address) for peer, key in key_table.items()}
