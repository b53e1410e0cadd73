"""
Scenario configuration
Validated with pydantic; environment variables (loaded from .env by the CLI) supply defaults
"""

import os
from enum import Enum
from ipaddress import IPv6Address
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from sim.adversary import DEFAULT_ATTACKER_LATENCY, DEFAULT_BURST_SIZE, AttackStrategy
from utils.errors import ConfigurationError

DEFAULT_HONEST_LATENCY = 5
DEFAULT_POOL_SIZE = 8
MAX_NODES = 200

HONEST_NAMES = ["alice", "bob", "carol", "dave", "erin", "frank", "grace", "heidi"]
INTRUDER_NAME = "intruder"
INTRUDER_IP = IPv6Address("fe80::ee")
INTRUDER_MAC = "02:00:00:00:00:ee"


class Scenario(str, Enum):
    BASELINE_RESOLUTION = "baseline_resolution"
    PROPOSAL_RESOLUTION = "proposal_resolution"
    BASELINE_ATTACK = "baseline_attack"
    PROPOSAL_ATTACK_GUESS = "proposal_attack_guess"
    PROPOSAL_ATTACK_REFLECT = "proposal_attack_reflect"
    OVERHEAD_COMPARE = "overhead_compare"


ATTACK_SCENARIOS = {
    Scenario.BASELINE_ATTACK: AttackStrategy.SNIFF_PLAINTEXT,
    Scenario.PROPOSAL_ATTACK_GUESS: AttackStrategy.GUESS_POOL,
    Scenario.PROPOSAL_ATTACK_REFLECT: AttackStrategy.REFLECT_HASH,
}

# Scenarios whose attacker steps outside the threat model the experiment was built for
OUT_OF_MODEL = {Scenario.PROPOSAL_ATTACK_REFLECT}


class KeyExchangePolicy(str, Enum):
    EAGER = "eager"
    ON_DEMAND = "on_demand"


class ReportFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


def env_int(name: str, default: int) -> int:
    value = os.getenv(name)
    if value is None or value == "":
        return default
    try:
        return int(value)
    except ValueError:
        raise ConfigurationError(f"Environment variable {name} must be an integer, got {value!r}")


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    scenario: Scenario
    node_count: int = Field(default=3, ge=2, le=MAX_NODES)
    repetitions: int = Field(default=30, ge=1)
    seed: int = Field(default=0, ge=0, lt=1 << 64)
    latencies: Dict[str, int] = Field(default_factory=dict)
    attacker_strategy: Optional[AttackStrategy] = None
    burst_size: int = Field(default=DEFAULT_BURST_SIZE, ge=1)
    pool_size: int = Field(default=DEFAULT_POOL_SIZE, ge=1)
    dh_group: str = Field(default="modp2048", pattern="^(modp2048|test)$")
    resolution_timeout: int = Field(default=100, ge=1)
    frame_overhead: int = Field(default=54, ge=0)
    key_exchange: KeyExchangePolicy = KeyExchangePolicy.EAGER
    workers: int = Field(default=1, ge=1)
    output_path: Optional[str] = None
    output_format: ReportFormat = ReportFormat.JSON
    trace_path: Optional[str] = None
    pcap_path: Optional[str] = None

    @model_validator(mode="after")
    def _topology(self):
        if self.is_attack and self.node_count < 3:
            raise ValueError(
                f"node_count: attack scenarios need at least 3 nodes (alice, bob, intruder), got {self.node_count}"
            )
        unknown = sorted(set(self.latencies) - set(self.node_names))
        if unknown:
            raise ValueError(f"latencies: unknown node(s) {', '.join(unknown)}; nodes are {', '.join(self.node_names)}")
        negative = sorted(name for name, ticks in self.latencies.items() if ticks < 0)
        if negative:
            raise ValueError(f"latencies: negative latency for {', '.join(negative)}")
        return self

    @property
    def is_attack(self) -> bool:
        return self.scenario in ATTACK_SCENARIOS

    @property
    def out_of_model(self) -> bool:
        return self.scenario in OUT_OF_MODEL

    @property
    def strategy(self) -> Optional[AttackStrategy]:
        if not self.is_attack:
            return None
        return self.attacker_strategy or ATTACK_SCENARIOS[self.scenario]

    @property
    def honest_count(self) -> int:
        return self.node_count - 1 if self.is_attack else self.node_count

    @property
    def honest_names(self) -> List[str]:
        return [honest_name(i) for i in range(self.honest_count)]

    @property
    def node_names(self) -> List[str]:
        names = self.honest_names
        return names + [INTRUDER_NAME] if self.is_attack else names

    def latency_of(self, name: str) -> int:
        default = DEFAULT_ATTACKER_LATENCY if name == INTRUDER_NAME else DEFAULT_HONEST_LATENCY
        return self.latencies.get(name, default)


def honest_name(index: int) -> str:
    return HONEST_NAMES[index] if index < len(HONEST_NAMES) else f"host{index + 1}"


def honest_ip(index: int) -> IPv6Address:
    return IPv6Address(f"fe80::{index + 1:x}")


def honest_mac(index: int) -> str:
    return f"02:00:00:00:{(index + 1) >> 8:02x}:{(index + 1) & 0xFF:02x}"


def build_config(**values) -> ScenarioConfig:
    """Construct a ScenarioConfig, turning validation failures into one ConfigurationError"""
    try:
        return ScenarioConfig(**values)
    except ValidationError as e:
        diagnostics = []
        for error in e.errors():
            location = ".".join(str(part) for part in error["loc"]) or "config"
            diagnostics.append(f"{location}: {error['msg']}")
        raise ConfigurationError("Invalid scenario configuration", diagnostics)
