"""
Finite-field Diffie-Hellman key agreement
Produces the pairwise secret every pair of hosts shares before hashed neighbor discovery starts
"""

import hashlib
import random
from dataclasses import dataclass
from ipaddress import IPv6Address

from utils.errors import DhParameterError, SmallSubgroupError

SEED_LIMIT = 1 << 64
# Bit length cap for seeded private exponents
EXPONENT_BITS = 256


@dataclass(frozen=True)
class DhGroup:
    """Prime modulus and generator of a MODP group"""
    prime_modulus: int
    generator: int
    name: str = "custom"

    def __post_init__(self):
        p, g = self.prime_modulus, self.generator
        if p < 5 or p % 2 == 0:
            raise DhParameterError(f"Prime modulus must be odd and >= 5, got {p}")
        if not 2 <= g <= p - 2:
            raise DhParameterError(f"Generator must lie in [2, p-2], got {g}")

    def is_degenerate(self, value: int) -> bool:
        """True for values outside [2, p-2]: 0, 1, p-1 and anything out of range"""
        return not 2 <= value <= self.prime_modulus - 2


# RFC 3526 group 14 (2048-bit safe prime)
MODP_2048 = DhGroup(
    prime_modulus=int(
        "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD1"
        "29024E088A67CC74020BBEA63B139B22514A08798E3404DD"
        "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245"
        "E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
        "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3D"
        "C2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F"
        "83655D23DCA3AD961C62F356208552BB9ED529077096966D"
        "670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
        "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9"
        "DE2BCBF6955817183995497CEA956AE515D2261898FA0510"
        "15728E5A8AACAA68FFFFFFFFFFFFFFFF",
        16,
    ),
    generator=2,
    name="modp2048",
)

# Toy group for unit tests
TEST_GROUP = DhGroup(prime_modulus=23, generator=5, name="test")

GROUPS = {MODP_2048.name: MODP_2048, TEST_GROUP.name: TEST_GROUP}


def group_by_name(name: str) -> DhGroup:
    try:
        return GROUPS[name]
    except KeyError:
        raise DhParameterError(f"Unknown DH group '{name}' (choose from {', '.join(GROUPS)})")


@dataclass(frozen=True)
class DhKeyPair:
    private_exponent: int
    public_value: int


@dataclass(frozen=True)
class PairwiseKey:
    """HMAC key shared with one peer"""
    peer_ip: IPv6Address
    key_bytes: bytes

    def __post_init__(self):
        if len(self.key_bytes) != 32:
            raise DhParameterError(f"Pairwise key must be 32 bytes, got {len(self.key_bytes)}")


def generate_keypair(group: DhGroup, seed: int, private_exponent: int = None) -> DhKeyPair:
    """
    Generate an ephemeral key pair.

    The private exponent is drawn from a PRNG seeded with `seed`, so equal
    (group, seed) always yields the same pair. Exponents are at most
    EXPONENT_BITS long; draws outside [2, p-2] or whose public value is
    degenerate are discarded. `private_exponent` forces a specific exponent,
    which must itself be in [2, p-2] and produce a non-degenerate public value.
    """
    if not 0 <= seed < SEED_LIMIT:
        raise DhParameterError(f"Seed must be a 64-bit unsigned integer, got {seed}")

    p, g = group.prime_modulus, group.generator

    if private_exponent is not None:
        if not 2 <= private_exponent <= p - 2:
            raise DhParameterError(
                f"Private exponent must lie in [2, {p - 2}], got {private_exponent}"
            )
        public = pow(g, private_exponent, p)
        if group.is_degenerate(public):
            raise DhParameterError(
                f"Private exponent {private_exponent} yields degenerate public value {public}"
            )
        return DhKeyPair(private_exponent=private_exponent, public_value=public)

    rng = random.Random(seed)
    bits = min(EXPONENT_BITS, (p - 3).bit_length())
    while True:
        exponent = rng.getrandbits(bits)
        if not 2 <= exponent <= p - 2:
            continue
        public = pow(g, exponent, p)
        if not group.is_degenerate(public):
            return DhKeyPair(private_exponent=exponent, public_value=public)


def compute_shared_secret(own: DhKeyPair, peer_public: int, group: DhGroup) -> int:
    """peer_public ** own.private_exponent mod p, rejecting small-subgroup values"""
    if group.is_degenerate(peer_public):
        raise SmallSubgroupError(
            f"Peer public value {peer_public} is degenerate for a {group.prime_modulus.bit_length()}-bit group"
        )
    return pow(peer_public, own.private_exponent, group.prime_modulus)


def int_to_bytes(value: int) -> bytes:
    """Minimal big-endian encoding; zero encodes as a single zero byte"""
    return value.to_bytes(max(1, (value.bit_length() + 7) // 8), "big")


def derive_hmac_key(shared_secret: int) -> bytes:
    """SHA-256 over the minimal big-endian encoding of the shared secret"""
    if shared_secret < 0:
        raise DhParameterError("Shared secret must be non-negative")
    return hashlib.sha256(int_to_bytes(shared_secret)).digest()
