from ipaddress import IPv6Address

import pytest

from experiment.config import build_config
from experiment.runner import simulate
from ndp.codec import Mode, NeighborSolicitation, encode
from sim.frames import SimFrame
from sim.netsim import NetSim
from utils.addresses import ALL_NODES_IP, ALL_NODES_MAC
from utils.errors import ConfigurationError

GHOST = IPv6Address("fe80::99")


class Recorder:
    """Minimal entity that logs deliveries and never replies"""

    def __init__(self, index: int, promiscuous: bool = False):
        self.name = f"n{index}"
        self.ip = IPv6Address(f"fe80::{index}")
        self.mac = bytes([2, 0, 0, 0, 0, index])
        self.promiscuous = promiscuous
        self.received = []

    def on_frame(self, frame, message, now):
        self.received.append((now, frame.src_ip, message))
        return []

    def on_clock(self, now):
        pass


def ns_frame(sender: Recorder, dst_ip=ALL_NODES_IP, dst_mac=ALL_NODES_MAC) -> SimFrame:
    message = NeighborSolicitation(Mode.STANDARD, GHOST.packed, sender.mac)
    return SimFrame(sender.mac, dst_mac, sender.ip, dst_ip, encode(message, sender.ip, dst_ip))


def attach_all(sim, entities, latencies):
    return [sim.attach(e, latency) for e, latency in zip(entities, latencies)]


def test_multicast_reaches_everyone_but_sender():
    sim = NetSim()
    a, b, c = Recorder(1), Recorder(2), Recorder(3)
    handles = attach_all(sim, [a, b, c], [5, 5, 5])
    sim.send(handles[0], ns_frame(a))
    counters = sim.run()

    assert not a.received
    assert len(b.received) == len(c.received) == 1
    assert counters.nodes["n1"].frames_out == 1
    assert counters.nodes["n1"].bytes_out == 32 + 54
    for name in ("n2", "n3"):
        assert counters.nodes[name].frames_in == 1
        assert counters.nodes[name].bytes_in == 86
    assert counters.by_type == {"ns/0": 1}


def test_by_type_separates_codes():
    sim = NetSim()
    a, b = Recorder(1), Recorder(2)
    handles = attach_all(sim, [a, b], [1, 1])
    sim.send(handles[0], ns_frame(a))
    hashed = NeighborSolicitation(Mode.HASHED, bytes(range(16)), a.mac)
    sim.send(handles[0], SimFrame(a.mac, ALL_NODES_MAC, a.ip, ALL_NODES_IP, encode(hashed, a.ip, ALL_NODES_IP)))
    sim.send(handles[0], ns_frame(a))
    counters = sim.run()
    assert counters.by_type == {"ns/0": 2, "ns/1": 1}


def test_frame_overhead_configurable():
    sim = NetSim(frame_overhead=0)
    a, b = Recorder(1), Recorder(2)
    handles = attach_all(sim, [a, b], [1, 1])
    sim.send(handles[0], ns_frame(a))
    assert sim.run().nodes["n2"].bytes_in == 32


def test_unicast_reaches_owner_and_taps_only():
    sim = NetSim()
    a, b, c, tap = Recorder(1), Recorder(2), Recorder(3), Recorder(4, promiscuous=True)
    handles = attach_all(sim, [a, b, c, tap], [1, 1, 1, 1])
    sim.send(handles[0], ns_frame(a, dst_ip=b.ip, dst_mac=b.mac))
    sim.run()
    assert len(b.received) == 1
    assert len(tap.received) == 1
    assert not c.received


def test_latency_orders_delivery():
    sim = NetSim()
    a, slow, fast = Recorder(1), Recorder(2), Recorder(3)
    handles = attach_all(sim, [a, slow, fast], [0, 5, 1])
    sim.send(handles[0], ns_frame(a))
    sim.run()
    assert [record.recipient for record in sim.trace] == ["n3", "n2"]
    assert fast.received[0][0] == 1
    assert slow.received[0][0] == 5


def test_ties_break_by_insertion_order():
    sim = NetSim()
    entities = [Recorder(i) for i in range(1, 5)]
    handles = attach_all(sim, entities, [2, 2, 2, 2])
    sim.send(handles[0], ns_frame(entities[0]))
    sim.send(handles[3], ns_frame(entities[3]))
    sim.run()
    assert [(r.src_ip, r.recipient) for r in sim.trace] == [
        (entities[0].ip, "n2"),
        (entities[0].ip, "n3"),
        (entities[0].ip, "n4"),
        (entities[3].ip, "n1"),
        (entities[3].ip, "n2"),
        (entities[3].ip, "n3"),
    ]


@pytest.mark.parametrize("field", ["ip", "mac", "name"])
def test_duplicate_attachment_rejected(field):
    sim = NetSim()
    first, second = Recorder(1), Recorder(2)
    setattr(second, field, getattr(first, field))
    sim.attach(first, 1)
    with pytest.raises(ConfigurationError):
        sim.attach(second, 1)


def test_negative_latency_rejected():
    with pytest.raises(ConfigurationError):
        NetSim().attach(Recorder(1), -1)


def test_unknown_handle():
    with pytest.raises(ConfigurationError):
        NetSim().handle("nobody")


def test_empty_run_has_zero_counters():
    sim = NetSim()
    attach_all(sim, [Recorder(1), Recorder(2)], [1, 1])
    counters = sim.run()
    assert counters.total_frames == 0
    assert all(n.frames_in == n.frames_out == n.bytes_in == n.bytes_out == 0 for n in counters.nodes.values())
    assert sim.idle


def test_run_until_leaves_later_events_queued():
    sim = NetSim()
    a, b = Recorder(1), Recorder(2)
    handles = attach_all(sim, [a, b], [0, 10])
    sim.send(handles[0], ns_frame(a))
    sim.run(until=4)
    assert sim.now == 4
    assert not sim.idle
    assert not b.received
    sim.run()
    assert b.received[0][0] == 10


def test_malformed_frames_counted_and_dropped():
    sim = NetSim()
    a, b = Recorder(1), Recorder(2)
    handles = attach_all(sim, [a, b], [1, 1])
    garbage = SimFrame(a.mac, ALL_NODES_MAC, a.ip, ALL_NODES_IP, b"\x87\x00\x00")
    sim.send(handles[0], garbage)
    counters = sim.run()
    assert counters.by_type == {"malformed": 1}
    assert counters.nodes["n1"].frames_out == 1
    assert not b.received


def test_snapshot_is_detached():
    sim = NetSim()
    a, b = Recorder(1), Recorder(2)
    handles = attach_all(sim, [a, b], [1, 1])
    snapshot = sim.run()
    sim.send(handles[0], ns_frame(a))
    sim.run()
    assert snapshot.total_frames == 0


def test_frame_causality():
    with pytest.raises(ValueError):
        SimFrame(b"\x00" * 6, b"\x00" * 6, GHOST, GHOST, b"", send_time=5, deliver_time=4)


@pytest.mark.parametrize("scenario", ["proposal_resolution", "baseline_attack", "proposal_attack_guess"])
def test_conservation(scenario):
    config = build_config(scenario=scenario, node_count=4, repetitions=1, dh_group="test")
    mode = Mode.STANDARD if scenario.startswith("baseline") else Mode.HASHED
    _, sim = simulate(config, mode, seed=9, record_trace=True)
    counters = sim.counters

    assert sum(counters.by_type.values()) == counters.total_frames
    assert sum(n.frames_out for n in counters.nodes.values()) == counters.total_frames
    assert sum(n.frames_in for n in counters.nodes.values()) == counters.deliveries == len(sim.trace)
    assert all(r.tick >= 0 for r in sim.trace)


def test_identical_seed_gives_identical_trace():
    config = build_config(scenario="baseline_attack", repetitions=1)
    first_result, first = simulate(config, Mode.STANDARD, seed=3, record_trace=True)
    second_result, second = simulate(config, Mode.STANDARD, seed=3, record_trace=True)
    assert first.trace == second.trace
    assert first_result == second_result


def test_write_pcap(tmp_path):
    scapy = pytest.importorskip("scapy.all")
    sim = NetSim()
    a, b = Recorder(1), Recorder(2)
    handles = attach_all(sim, [a, b], [1, 1])
    sim.send(handles[0], ns_frame(a))
    sim.run()

    path = tmp_path / "capture.pcap"
    sim.write_pcap(str(path))
    packets = scapy.rdpcap(str(path))
    assert len(packets) == 1
    assert packets[0].haslayer(scapy.ICMPv6ND_NS)
