"""Run ledgers and the four comparison metrics.

* average energy consumption: mean over all deployed nodes of initial - final
* routing overhead: total routing (non-data) transmissions
* delivery ratio: consumer receptions (duplicates included) / source generations
* bandwidth utilization: per sampling cycle max(bytes in, bytes out) * 8 * 100
  / (cycle seconds * network speed), averaged over cycles
"""

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Set, Tuple

from pydantic import BaseModel, ConfigDict

from wsnsim.engine import SimTime, TraceRecord, time_to_seconds
from wsnsim.network.energy import EnergyAccount
from wsnsim.network.ledger import LinkByteLedger
from wsnsim.protocols.packets import Packet, classify_routing_packet

BITS_PER_BYTE = 8
PERCENT = 100


@dataclass
class MetricsLedger:
    node_count: int
    link_bytes: LinkByteLedger
    routing_tx: List[int] = field(default_factory=list)
    data_tx: List[int] = field(default_factory=list)
    energy_initial: List[float] = field(default_factory=list)
    energy_final: List[float] = field(default_factory=list)
    sent: int = 0
    received: int = 0
    duplicates: int = 0
    routing_failures: int = 0
    duration: SimTime = 0
    _delivered: Set[Tuple[int, int]] = field(default_factory=set, repr=False)

    def __post_init__(self):
        if not self.routing_tx:
            self.routing_tx = [0] * self.node_count
        if not self.data_tx:
            self.data_tx = [0] * self.node_count

    @property
    def unique(self) -> int:
        return len(self._delivered)

    @property
    def total_transmissions(self) -> int:
        return sum(self.routing_tx) + sum(self.data_tx)

    def on_transmit(self, node: int, packet: Packet, at: SimTime) -> None:
        if classify_routing_packet(packet):
            self.routing_tx[node] += 1
        else:
            self.data_tx[node] += 1
        self.link_bytes.credit_out(at, packet.size)

    def on_receive(self, node: int, packet: Packet, at: SimTime) -> None:
        self.link_bytes.credit_in(at, packet.size)

    def on_generated(self) -> None:
        self.sent += 1

    def on_consumed(self, packet: Packet) -> bool:
        """Count a consumer reception; returns True if it was the first copy."""
        self.received += 1
        if packet.key in self._delivered:
            self.duplicates += 1
            return False
        self._delivered.add(packet.key)
        return True

    def on_routing_failure(self) -> None:
        self.routing_failures += 1

    def close(self, accounts: Sequence[EnergyAccount], duration: SimTime) -> None:
        self.energy_initial = [account.initial for account in accounts]
        self.energy_final = [account.remaining for account in accounts]
        self.duration = duration


def mean_energy_drop(initials: Sequence[float], finals: Sequence[float]) -> float:
    if not initials:
        return 0.0
    return sum(i - f for i, f in zip(initials, finals)) / len(initials)


def avg_energy(ledger: MetricsLedger) -> float:
    return mean_energy_drop(ledger.energy_initial, ledger.energy_final)


def routing_overhead(ledger: MetricsLedger) -> int:
    return sum(ledger.routing_tx)


def delivery_ratio(ledger: MetricsLedger) -> Optional[float]:
    if ledger.sent == 0:
        return None
    return ledger.received / ledger.sent


def unique_delivery_fraction(ledger: MetricsLedger) -> Optional[float]:
    if ledger.sent == 0:
        return None
    return ledger.unique / ledger.sent


def band_util_sample(
    bytes_in: int, bytes_out: int, cycle_seconds: float, network_speed_bps: float
) -> Optional[float]:
    """Bandwidth utilization of one sampling cycle, in percent."""
    if cycle_seconds <= 0:
        return None
    return (
        max(bytes_in, bytes_out)
        * BITS_PER_BYTE
        * PERCENT
        / (cycle_seconds * network_speed_bps)
    )


def bandwidth_utilization(ledger: MetricsLedger) -> Optional[float]:
    link = ledger.link_bytes
    cycle_seconds = time_to_seconds(link.interval)
    samples = [
        band_util_sample(bytes_in, bytes_out, cycle_seconds, link.network_speed_bps)
        for bytes_in, bytes_out in link.cycles(ledger.duration)
    ]
    samples = [sample for sample in samples if sample is not None]
    if not samples:
        return None
    return sum(samples) / len(samples)


def bytes_per_second(ledger: MetricsLedger) -> float:
    seconds = time_to_seconds(ledger.duration)
    if seconds <= 0:
        return 0.0
    return ledger.link_bytes.total_out / seconds


class RunResult(BaseModel):
    """Outcome of one (protocol, topology row, seed) run."""

    model_config = ConfigDict(frozen=True)

    protocol: str
    nodes: int
    seed: int
    e_avg_j: Optional[float] = None
    r_oh: Optional[int] = None
    dr: Optional[float] = None
    band_util_pct: Optional[float] = None
    duplicates: Optional[int] = None
    sent: Optional[int] = None
    received: Optional[int] = None
    unique: Optional[int] = None
    bytes_per_s: Optional[float] = None
    routing_failures: Optional[int] = None
    status: str = "ok"
    wall_time_s: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def unique_fraction(self) -> Optional[float]:
        if not self.sent or self.unique is None:
            return None
        return self.unique / self.sent

    @property
    def sort_key(self) -> Tuple[str, int, int]:
        return self.protocol, self.nodes, self.seed

    @classmethod
    def from_ledger(
        cls,
        protocol: str,
        nodes: int,
        seed: int,
        ledger: MetricsLedger,
        wall_time_s: float = 0.0,
    ) -> "RunResult":
        return cls(
            protocol=protocol,
            nodes=nodes,
            seed=seed,
            e_avg_j=avg_energy(ledger),
            r_oh=routing_overhead(ledger),
            dr=delivery_ratio(ledger),
            band_util_pct=bandwidth_utilization(ledger),
            duplicates=ledger.duplicates,
            sent=ledger.sent,
            received=ledger.received,
            unique=ledger.unique,
            bytes_per_s=bytes_per_second(ledger),
            routing_failures=ledger.routing_failures,
            wall_time_s=wall_time_s,
        )

    @classmethod
    def failed(
        cls, protocol: str, nodes: int, seed: int, wall_time_s: float = 0.0
    ) -> "RunResult":
        return cls(
            protocol=protocol,
            nodes=nodes,
            seed=seed,
            status="failed",
            wall_time_s=wall_time_s,
        )


def transmissions_by_kind(trace: Iterable[TraceRecord]) -> Counter:
    """Count `tx` trace records per packet kind."""
    counts: Counter = Counter()
    for record in trace:
        if record.kind == "tx":
            counts[record.detail["packet"]] += 1
    return counts
