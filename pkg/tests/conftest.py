import pytest

from experiment.config import honest_ip, honest_mac, honest_name
from keying.dh_keyex import TEST_GROUP
from ndp.codec import Mode
from ndp.node_engine import NdpNode
from sim.netsim import NetSim
from utils.addresses import parse_mac


def make_node(index: int, mode: Mode = Mode.STANDARD, group=TEST_GROUP, seed: int = None, **kwargs) -> NdpNode:
    return NdpNode(
        name=honest_name(index),
        own_ip=honest_ip(index),
        own_mac=parse_mac(honest_mac(index)),
        mode=mode,
        group=group,
        seed=1000 + index if seed is None else seed,
        **kwargs,
    )


def exchange_all_keys(sim: NetSim, nodes):
    """Eager key exchange between every pair, run to quiescence"""
    for i, a in enumerate(nodes):
        for b in nodes[i + 1:]:
            frame = a.start_key_exchange(b.ip, sim.now)
            sim.send(sim.handle(a.name), frame)
    sim.run()


@pytest.fixture
def build_link():
    """build_link(count, mode, latency=5) -> (sim, [nodes])"""

    def build(count: int = 3, mode: Mode = Mode.STANDARD, latency: int = 5, keyed: bool = True, **kwargs):
        sim = NetSim()
        nodes = [make_node(i, mode, **kwargs) for i in range(count)]
        for node in nodes:
            sim.attach(node, latency)
        if mode == Mode.HASHED and keyed:
            exchange_all_keys(sim, nodes)
        return sim, nodes

    return build
