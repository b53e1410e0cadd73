"""
The Intruder
Promiscuous tap that answers every observed NS with a burst of forged NAs carrying its own MAC
"""

from enum import Enum
from ipaddress import IPv6Address
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ndp.codec import Mode, NdpMessage, NeighborAdvertisement, NeighborSolicitation, decode, encode
from sim.frames import SimFrame
from utils.addresses import format_mac, parse_mac
from utils.errors import NdpDecodeError

DEFAULT_BURST_SIZE = 5
DEFAULT_ATTACKER_LATENCY = 1


class AttackStrategy(str, Enum):
    SNIFF_PLAINTEXT = "sniff_plaintext"
    GUESS_POOL = "guess_pool"
    REFLECT_HASH = "reflect_hash"


class AttackerConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    strategy: AttackStrategy = AttackStrategy.SNIFF_PLAINTEXT
    burst_size: int = Field(default=DEFAULT_BURST_SIZE, ge=1)
    guess_pool: List[IPv6Address] = Field(default_factory=list)
    own_mac: str = "02:00:00:00:00:ee"
    own_ip: IPv6Address = IPv6Address("fe80::ee")
    latency: int = Field(default=DEFAULT_ATTACKER_LATENCY, ge=0)

    @field_validator("own_mac")
    @classmethod
    def _valid_mac(cls, value: str) -> str:
        parse_mac(value)
        return value.lower()

    @model_validator(mode="after")
    def _pool_required(self):
        if self.strategy == AttackStrategy.GUESS_POOL and not self.guess_pool:
            raise ValueError("guess_pool must be non-empty for the guess_pool strategy")
        return self

    @property
    def mac_bytes(self) -> bytes:
        return parse_mac(self.own_mac)


class AttackOutcome(BaseModel):
    succeeded: bool
    victim_cached_mac: Optional[str] = None
    forged_frames_sent: int = 0


def _forge(cfg: AttackerConfig, ns_frame: SimFrame, ns: NeighborSolicitation,
           mode: Mode, target_field: bytes, spoofed_src: IPv6Address) -> List[SimFrame]:
    forged = NeighborAdvertisement(
        mode=mode,
        target_field=target_field,
        target_link_layer=cfg.mac_bytes,
        solicited=True,
        override=True,
    )
    # Reply straight back to the solicitor
    dst_ip = ns_frame.src_ip
    frame = SimFrame(
        src_mac=cfg.mac_bytes,
        dst_mac=ns.source_link_layer,
        src_ip=spoofed_src,
        dst_ip=dst_ip,
        payload=encode(forged, spoofed_src, dst_ip),
    )
    return [frame] * cfg.burst_size


def on_observe(cfg: AttackerConfig, frame: SimFrame) -> List[SimFrame]:
    """Forged frames the attacker emits in reaction to one observed frame"""
    try:
        message = decode(frame.payload, frame.src_ip, frame.dst_ip)
    except NdpDecodeError:
        return []
    if not isinstance(message, NeighborSolicitation):
        return []

    if cfg.strategy == AttackStrategy.SNIFF_PLAINTEXT:
        # Copies whatever the Target holds; against hashed NS this is noise
        claimed = IPv6Address(message.target_field)
        return _forge(cfg, frame, message, Mode.STANDARD, message.target_field, claimed)

    if cfg.strategy == AttackStrategy.GUESS_POOL:
        forged: List[SimFrame] = []
        for candidate in cfg.guess_pool:
            forged += _forge(cfg, frame, message, message.mode, candidate.packed, candidate)
        return forged

    # reflect_hash: echo the opaque Target back under our own MAC
    return _forge(cfg, frame, message, Mode.HASHED, message.target_field, cfg.own_ip)


class Intruder:
    """Simulator entity wrapping on_observe; holds no pairwise keys"""

    promiscuous = True

    def __init__(self, cfg: AttackerConfig, name: str = "intruder"):
        self.name = name
        self.cfg = cfg
        self.frames_observed = 0
        self.ns_observed = 0
        self.forged_frames_sent = 0

    @property
    def ip(self) -> IPv6Address:
        return self.cfg.own_ip

    @property
    def mac(self) -> bytes:
        return self.cfg.mac_bytes

    def on_clock(self, now: int):
        pass

    def on_frame(self, frame: SimFrame, message: NdpMessage, now: int) -> List[SimFrame]:
        self.frames_observed += 1
        if isinstance(message, NeighborSolicitation):
            self.ns_observed += 1
        forged = on_observe(self.cfg, frame)
        self.forged_frames_sent += len(forged)
        return forged


def attack_outcome(intruder: Intruder, victim, target_ip: IPv6Address) -> AttackOutcome:
    """Succeeded iff the victim now maps the true target to the attacker's MAC"""
    cached = victim.lookup(target_ip)
    return AttackOutcome(
        succeeded=cached == intruder.mac,
        victim_cached_mac=format_mac(cached) if cached else None,
        forged_frames_sent=intruder.forged_frames_sent,
    )
