"""
Link-layer frame exchanged on the simulated link
"""

from dataclasses import dataclass, replace
from ipaddress import IPv6Address


@dataclass(frozen=True)
class SimFrame:
    src_mac: bytes
    dst_mac: bytes
    src_ip: IPv6Address
    dst_ip: IPv6Address
    payload: bytes
    send_time: int = 0
    deliver_time: int = 0

    def __post_init__(self):
        if self.deliver_time < self.send_time:
            raise ValueError(
                f"Frame delivered at {self.deliver_time} before it was sent at {self.send_time}"
            )

    @property
    def is_multicast(self) -> bool:
        return self.dst_ip.is_multicast

    def scheduled(self, send_time: int, deliver_time: int) -> "SimFrame":
        return replace(self, send_time=send_time, deliver_time=deliver_time)
