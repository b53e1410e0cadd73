"""
Per-host neighbor discovery engine
Runs the pairwise key exchange, sends solicitations, answers the ones meant for us and keeps the neighbor cache
"""

import random
from dataclasses import dataclass, field
from enum import Enum
from ipaddress import IPv6Address
from typing import Callable, Dict, List, Optional, Set

from rich.console import Console

from keying.dh_keyex import (
    MODP_2048,
    DhGroup,
    DhKeyPair,
    PairwiseKey,
    compute_shared_secret,
    derive_hmac_key,
    generate_keypair,
    int_to_bytes,
)
from keying.hashed_target import HashedTarget, hash_target, precompute_self_hashes, verify_target
from ndp.codec import (
    KexInit,
    KexResp,
    Mode,
    NdpMessage,
    NeighborAdvertisement,
    NeighborSolicitation,
    encode,
)
from sim.frames import SimFrame
from utils.addresses import ALL_NODES_IP, ALL_NODES_MAC, format_mac, solicited_node_mac
from utils.errors import (
    MissingKeyError,
    ModeError,
    ProtocolOrderError,
    ResolutionPendingError,
    SmallSubgroupError,
)

console = Console(stderr=True)

DEFAULT_RESOLUTION_TIMEOUT = 100

KeypairFactory = Callable[[DhGroup, int], DhKeyPair]


class CacheUpdate(str, Enum):
    ACCEPTED = "accepted"
    IGNORED_DUPLICATE = "ignored-duplicate"
    IGNORED_UNSOLICITED = "ignored-unsolicited"


class ResolutionStatus(str, Enum):
    PENDING = "pending"
    RESOLVED = "resolved"
    FAILED = "failed"


@dataclass(frozen=True)
class CacheEntry:
    mac: bytes
    established_at: int


@dataclass(frozen=True)
class PendingResolution:
    target_ip: IPv6Address
    match_key: bytes
    deadline: int


@dataclass
class NodeState:
    own_ip: IPv6Address
    own_mac: bytes
    mode: Mode
    key_table: Dict[IPv6Address, PairwiseKey] = field(default_factory=dict)
    self_hash_table: Dict[IPv6Address, HashedTarget] = field(default_factory=dict)
    neighbor_cache: Dict[IPv6Address, CacheEntry] = field(default_factory=dict)
    pending: Dict[bytes, PendingResolution] = field(default_factory=dict)
    dh_state: Dict[IPv6Address, DhKeyPair] = field(default_factory=dict)
    # peers we sent a KexInit to; a lower address keeps rejecting their late KexInit
    kex_initiated: Set[IPv6Address] = field(default_factory=set)
    # match keys of resolutions already answered, for first-wins bookkeeping
    completed: Dict[bytes, IPv6Address] = field(default_factory=dict)
    resolutions: Dict[IPv6Address, ResolutionStatus] = field(default_factory=dict)


class NdpNode:
    """An honest host attached to the simulated link"""

    promiscuous = False

    def __init__(
        self,
        name: str,
        own_ip: IPv6Address,
        own_mac: bytes,
        mode: Mode = Mode.STANDARD,
        group: DhGroup = MODP_2048,
        seed: int = 0,
        resolution_timeout: int = DEFAULT_RESOLUTION_TIMEOUT,
        keypair_factory: Optional[KeypairFactory] = None,
    ):
        self.name = name
        self.state = NodeState(own_ip=own_ip, own_mac=own_mac, mode=Mode(mode))
        self.group = group
        self.resolution_timeout = resolution_timeout
        self._rng = random.Random(seed)
        self._keypair_factory = keypair_factory or generate_keypair
        self.stats: Dict[str, int] = {
            "na_accepted": 0,
            "na_duplicate": 0,
            "na_unsolicited": 0,
            "na_sent": 0,
            "dropped_unknown_peer": 0,
            "rejected_kex": 0,
            "protocol_errors": 0,
            "kex_collisions": 0,
        }

    # Identity used by the simulator

    @property
    def ip(self) -> IPv6Address:
        return self.state.own_ip

    @property
    def mac(self) -> bytes:
        return self.state.own_mac

    @property
    def mode(self) -> Mode:
        return self.state.mode

    def _frame(self, message: NdpMessage, dst_ip: IPv6Address, dst_mac: bytes, now: int = 0) -> SimFrame:
        return SimFrame(
            src_mac=self.mac,
            dst_mac=dst_mac,
            src_ip=self.ip,
            dst_ip=dst_ip,
            payload=encode(message, self.ip, dst_ip),
            send_time=now,
            deliver_time=now,
        )

    # Key establishment

    def start_key_exchange(self, peer_ip: IPv6Address, now: int = 0) -> Optional[SimFrame]:
        """Send KexInit to peer_ip; None when a key exists or an exchange is already in flight"""
        if self.mode != Mode.HASHED:
            raise ModeError(f"{self.name}: key exchange is only used in hashed mode")
        if peer_ip in self.state.key_table or peer_ip in self.state.dh_state:
            return None

        keypair = self._keypair_factory(self.group, self._rng.getrandbits(64))
        self.state.dh_state[peer_ip] = keypair
        self.state.kex_initiated.add(peer_ip)
        message = KexInit(public_value=int_to_bytes(keypair.public_value))
        return self._frame(message, peer_ip, solicited_node_mac(peer_ip), now)

    def _install_key(self, peer_ip: IPv6Address, keypair: DhKeyPair, peer_public: int):
        secret = compute_shared_secret(keypair, peer_public, self.group)
        key = PairwiseKey(peer_ip=peer_ip, key_bytes=derive_hmac_key(secret))
        self.state.key_table[peer_ip] = key
        self.state.self_hash_table.update(precompute_self_hashes(self.ip, {peer_ip: key.key_bytes}))

    def handle_kex(
        self, message: NdpMessage, src_ip: IPv6Address, src_mac: bytes = ALL_NODES_MAC, now: int = 0
    ) -> Optional[SimFrame]:
        if self.mode != Mode.HASHED:
            raise ModeError(f"{self.name}: key exchange is only used in hashed mode")

        if isinstance(message, KexInit):
            peer_public = message.public_int
            if self.group.is_degenerate(peer_public):
                raise SmallSubgroupError(f"{self.name}: degenerate KexInit public value from {src_ip}")

            # Both sides initiated; the lower address keeps its own exchange,
            # even when the peer's KexInit arrives after ours has completed
            if src_ip in self.state.kex_initiated:
                if self.ip < src_ip:
                    self.stats["kex_collisions"] += 1
                    return None
                self.state.dh_state.pop(src_ip, None)
                self.state.kex_initiated.discard(src_ip)

            keypair = self._keypair_factory(self.group, self._rng.getrandbits(64))
            self._install_key(src_ip, keypair, peer_public)
            reply = KexResp(public_value=int_to_bytes(keypair.public_value))
            return self._frame(reply, src_ip, src_mac, now)

        if isinstance(message, KexResp):
            keypair = self.state.dh_state.pop(src_ip, None)
            if keypair is None:
                raise ProtocolOrderError(f"{self.name}: KexResp from {src_ip} without a pending KexInit")
            try:
                self._install_key(src_ip, keypair, message.public_int)
            except SmallSubgroupError:
                self.state.kex_initiated.discard(src_ip)
                raise
            return None

        raise ProtocolOrderError(f"{self.name}: {type(message).__name__} is not a key-exchange message")

    # Address resolution

    def begin_resolution(self, target_ip: IPv6Address, now: int) -> SimFrame:
        """Multicast an NS for target_ip and remember what the answer must carry"""
        if target_ip == self.ip:
            raise ValueError(f"{self.name}: cannot resolve its own address")

        if self.mode == Mode.HASHED:
            key = self.state.key_table.get(target_ip)
            if key is None:
                raise MissingKeyError(
                    f"{self.name}: no pairwise key for {target_ip}; run the key exchange first"
                )
            match_key = hash_target(key.key_bytes, target_ip).bytes16
        else:
            match_key = target_ip.packed

        if match_key in self.state.pending:
            raise ResolutionPendingError(f"{self.name}: resolution of {target_ip} already pending")

        self.state.pending[match_key] = PendingResolution(
            target_ip=target_ip, match_key=match_key, deadline=now + self.resolution_timeout
        )
        self.state.resolutions[target_ip] = ResolutionStatus.PENDING

        message = NeighborSolicitation(mode=self.mode, target_field=match_key, source_link_layer=self.mac)
        return self._frame(message, ALL_NODES_IP, ALL_NODES_MAC, now)

    def _is_my_target(self, message: NeighborSolicitation, src_ip: IPv6Address) -> bool:
        if message.mode == Mode.STANDARD:
            return message.target_field == self.ip.packed

        key = self.state.key_table.get(src_ip)
        if key is None:
            self.stats["dropped_unknown_peer"] += 1
            return False
        return verify_target(
            key.key_bytes,
            self.ip,
            HashedTarget(bytes(message.target_field)),
            expected=self.state.self_hash_table[src_ip],
        )

    def handle_ns(self, message: NeighborSolicitation, src_ip: IPv6Address, now: int = 0) -> Optional[SimFrame]:
        if not self._is_my_target(message, src_ip):
            return None

        reply = NeighborAdvertisement(
            mode=message.mode,
            target_field=message.target_field,
            target_link_layer=self.mac,
            solicited=True,
        )
        self.stats["na_sent"] += 1
        return self._frame(reply, src_ip, message.source_link_layer, now)

    def handle_na(self, message: NeighborAdvertisement, src_ip: IPv6Address, now: int) -> CacheUpdate:
        target = bytes(message.target_field)
        pending = self.state.pending.get(target)

        if pending is not None and message.mode == self.mode:
            self.state.neighbor_cache[pending.target_ip] = CacheEntry(
                mac=message.target_link_layer, established_at=now
            )
            del self.state.pending[target]
            self.state.completed[target] = pending.target_ip
            self.state.resolutions[pending.target_ip] = ResolutionStatus.RESOLVED
            self.stats["na_accepted"] += 1
            return CacheUpdate.ACCEPTED

        if target in self.state.completed:
            self.stats["na_duplicate"] += 1
            return CacheUpdate.IGNORED_DUPLICATE

        self.stats["na_unsolicited"] += 1
        return CacheUpdate.IGNORED_UNSOLICITED

    def lookup(self, ip: IPv6Address) -> Optional[bytes]:
        entry = self.state.neighbor_cache.get(ip)
        return entry.mac if entry else None

    def reap_expired(self, now: int) -> List[IPv6Address]:
        """Drop pending resolutions whose deadline has passed; returns their targets"""
        expired = [p for p in self.state.pending.values() if now > p.deadline]
        for pending in expired:
            del self.state.pending[pending.match_key]
            self.state.resolutions[pending.target_ip] = ResolutionStatus.FAILED
        return [p.target_ip for p in expired]

    # Simulator hooks

    def on_clock(self, now: int):
        self.reap_expired(now)

    def on_frame(self, frame: SimFrame, message: NdpMessage, now: int) -> List[SimFrame]:
        try:
            if isinstance(message, (KexInit, KexResp)):
                reply = self.handle_kex(message, frame.src_ip, frame.src_mac, now)
            elif isinstance(message, NeighborSolicitation):
                reply = self.handle_ns(message, frame.src_ip, now)
            else:
                self.handle_na(message, frame.src_ip, now)
                reply = None
        except SmallSubgroupError as e:
            self.stats["rejected_kex"] += 1
            console.print(f"[yellow]⚠️  {e}[/yellow]")
            return []
        except (ProtocolOrderError, ModeError) as e:
            self.stats["protocol_errors"] += 1
            console.print(f"[dim]{e}[/dim]")
            return []

        return [reply] if reply else []

    def __repr__(self) -> str:
        return f"NdpNode({self.name}, {self.ip}, {format_mac(self.mac)}, {self.mode.name.lower()})"
