"""
Deterministic in-memory link
Discrete-tick event queue with multicast/unicast delivery, promiscuous taps and packet/byte accounting
"""

import heapq
from dataclasses import dataclass
from ipaddress import IPv6Address
from typing import Dict, List, Optional, Protocol, Tuple

from pydantic import BaseModel, Field
from rich.console import Console

from ndp.codec import TYPE_NAMES, NdpMessage, decode, message_code
from sim.frames import SimFrame
from utils.addresses import format_mac
from utils.errors import ConfigurationError, NdpDecodeError

console = Console(stderr=True)

# Ethernet (14) + IPv6 (40) headers added to every ICMPv6 image
DEFAULT_FRAME_OVERHEAD = 54


class SimEntity(Protocol):
    name: str
    promiscuous: bool

    @property
    def ip(self) -> IPv6Address: ...

    @property
    def mac(self) -> bytes: ...

    def on_frame(self, frame: SimFrame, message: NdpMessage, now: int) -> List[SimFrame]: ...

    def on_clock(self, now: int) -> None: ...


class NodeCounters(BaseModel):
    frames_out: int = 0
    frames_in: int = 0
    bytes_out: int = 0
    bytes_in: int = 0


class TrafficCounters(BaseModel):
    """Per-node and per-message-type traffic totals; by_type is keyed "ns/1", "kex_init/0", ..., plus malformed"""
    nodes: Dict[str, NodeCounters] = Field(default_factory=dict)
    by_type: Dict[str, int] = Field(default_factory=dict)
    total_frames: int = 0
    deliveries: int = 0


@dataclass(frozen=True)
class Attachment:
    name: str
    entity: SimEntity
    latency: int
    index: int


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    src_ip: IPv6Address
    dst_ip: IPv6Address
    type: int
    code: int
    size: int
    recipient: str


@dataclass(frozen=True)
class Transmission:
    sender: str
    frame: SimFrame
    message: Optional[NdpMessage]


class NetSim:
    def __init__(self, frame_overhead: int = DEFAULT_FRAME_OVERHEAD, record_trace: bool = True):
        if frame_overhead < 0:
            raise ConfigurationError("Frame overhead must be non-negative")
        self.frame_overhead = frame_overhead
        self.record_trace = record_trace
        self.now = 0
        self.attachments: List[Attachment] = []
        self.counters = TrafficCounters()
        self.trace: List[TraceRecord] = []
        self.transmissions: List[Transmission] = []
        self._queue: List[Tuple[int, int, int, SimFrame, NdpMessage]] = []
        self._seq = 0
        self._by_ip: Dict[IPv6Address, Attachment] = {}
        self._by_mac: Dict[bytes, Attachment] = {}

    def attach(self, entity: SimEntity, latency: int) -> Attachment:
        """Connect an entity; every frame reaches it `latency` ticks after being sent"""
        if latency < 0:
            raise ConfigurationError(f"Latency for {entity.name} must be non-negative, got {latency}")
        if entity.ip in self._by_ip:
            raise ConfigurationError(f"Duplicate IP {entity.ip} ({entity.name})")
        if entity.mac in self._by_mac:
            raise ConfigurationError(f"Duplicate MAC {format_mac(entity.mac)} ({entity.name})")
        if any(a.name == entity.name for a in self.attachments):
            raise ConfigurationError(f"Duplicate node name {entity.name}")

        handle = Attachment(name=entity.name, entity=entity, latency=latency, index=len(self.attachments))
        self.attachments.append(handle)
        self._by_ip[entity.ip] = handle
        self._by_mac[entity.mac] = handle
        self.counters.nodes[entity.name] = NodeCounters()
        return handle

    def handle(self, name: str) -> Attachment:
        for attachment in self.attachments:
            if attachment.name == name:
                return attachment
        raise ConfigurationError(f"No node named {name}")

    def _recipients(self, sender: Attachment, frame: SimFrame) -> List[Attachment]:
        if frame.is_multicast:
            return [a for a in self.attachments if a is not sender]

        recipients = []
        owner = self._by_ip.get(frame.dst_ip)
        if owner is not None and owner is not sender:
            recipients.append(owner)
        for tap in self.attachments:
            if tap.entity.promiscuous and tap is not sender and tap is not owner:
                recipients.append(tap)
        return sorted(recipients, key=lambda a: a.index)

    def send(self, sender: Attachment, frame: SimFrame):
        """Transmit a frame from `sender` at the current tick"""
        size = len(frame.payload) + self.frame_overhead
        out = self.counters.nodes[sender.name]
        out.frames_out += 1
        out.bytes_out += size
        self.counters.total_frames += 1

        try:
            message = decode(frame.payload, frame.src_ip, frame.dst_ip)
        except NdpDecodeError as e:
            self.counters.by_type["malformed"] = self.counters.by_type.get("malformed", 0) + 1
            self.transmissions.append(Transmission(sender.name, frame.scheduled(self.now, self.now), None))
            console.print(f"[dim]Dropped malformed frame from {sender.name}: {e}[/dim]")
            return

        type_key = f"{TYPE_NAMES[message.icmp_type]}/{message_code(message)}"
        self.counters.by_type[type_key] = self.counters.by_type.get(type_key, 0) + 1
        self.transmissions.append(Transmission(sender.name, frame.scheduled(self.now, self.now), message))

        for recipient in self._recipients(sender, frame):
            deliver_at = self.now + recipient.latency
            heapq.heappush(
                self._queue,
                (deliver_at, self._seq, recipient.index, frame.scheduled(self.now, deliver_at), message),
            )
            self._seq += 1

    def _advance(self, tick: int):
        if tick > self.now:
            self.now = tick
            for attachment in self.attachments:
                attachment.entity.on_clock(self.now)

    def run(self, until: Optional[int] = None) -> TrafficCounters:
        """Process deliveries in (deliver_time, insertion order) up to `until`; returns a snapshot"""
        while self._queue and (until is None or self._queue[0][0] <= until):
            deliver_at, _, index, frame, message = heapq.heappop(self._queue)
            self._advance(deliver_at)

            recipient = self.attachments[index]
            size = len(frame.payload) + self.frame_overhead
            into = self.counters.nodes[recipient.name]
            into.frames_in += 1
            into.bytes_in += size
            self.counters.deliveries += 1

            if self.record_trace:
                self.trace.append(
                    TraceRecord(
                        tick=self.now,
                        src_ip=frame.src_ip,
                        dst_ip=frame.dst_ip,
                        type=message.icmp_type,
                        code=message_code(message),
                        size=size,
                        recipient=recipient.name,
                    )
                )

            for reply in recipient.entity.on_frame(frame, message, self.now):
                self.send(recipient, reply)

        if until is not None:
            self._advance(until)

        return self.counters.model_copy(deep=True)

    @property
    def idle(self) -> bool:
        return not self._queue

    def write_pcap(self, path: str):
        """Dump every transmitted frame as Ethernet/IPv6/ICMPv6 for Wireshark"""
        from scapy.all import IPv6, Ether, Raw, wrpcap

        packets = []
        for sent in self.transmissions:
            frame = sent.frame
            packet = (
                Ether(src=format_mac(frame.src_mac), dst=format_mac(frame.dst_mac))
                / IPv6(src=str(frame.src_ip), dst=str(frame.dst_ip), nh=58, hlim=255)
                / Raw(load=frame.payload)
            )
            packet.time = frame.send_time
            packets.append(packet)
        wrpcap(path, packets)
