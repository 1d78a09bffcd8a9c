"""Disc radio plus an abstract CSMA-style MAC shared by every protocol.

No carrier sense or backoff state machine: a transmission reaches every
alive node within range after a per-hop latency of base + uniform jitter,
each reception independently lost with the configured probability. Unicast
senders learn about a dead receiver after the ACK timeout.
"""

from typing import Callable, List, Optional

from wsnsim.engine import EventHandle, SimEvent, Simulator, seconds_to_time
from wsnsim.metrics import MetricsLedger
from wsnsim.network.energy import EnergyAccount, EnergyModel
from wsnsim.network.topology import Topology
from wsnsim.protocols.packets import Packet, classify_routing_packet
from wsnsim.utils.console import get_logger
from wsnsim.utils.settings_models import RunSettings

MAC_STREAM = "mac"
LOSS_STREAM = "loss"

log = get_logger(__name__)

ReceiveHandler = Callable[[int, int, Packet], None]
LinkFailureHandler = Callable[[int, int, Packet], None]


class Network:
    """Radio, MAC and energy substrate for one run."""

    def __init__(
        self,
        sim: Simulator,
        topology: Topology,
        settings: RunSettings,
        ledger: MetricsLedger,
    ):
        self.sim = sim
        self.topology = topology
        self.settings = settings
        self.ledger = ledger
        self.energy_model = EnergyModel.from_settings(settings.energy)
        self.accounts: List[EnergyAccount] = [
            EnergyAccount(settings.energy.initial_j) for _ in topology.nodes
        ]
        self._killed = [False] * topology.size
        self._loss = settings.radio.loss
        self._base_latency = seconds_to_time(settings.mac.base_latency_s)
        self._jitter = seconds_to_time(settings.mac.jitter_s)
        self._ack_timeout = seconds_to_time(settings.mac.ack_timeout_s)
        self._mac_rng = sim.rng.stream(MAC_STREAM)
        self._loss_rng = sim.rng.stream(LOSS_STREAM)
        self._on_receive: Optional[ReceiveHandler] = None
        self._on_link_failure: Optional[LinkFailureHandler] = None

    def attach(
        self, on_receive: ReceiveHandler, on_link_failure: LinkFailureHandler
    ) -> None:
        self._on_receive = on_receive
        self._on_link_failure = on_link_failure

    def alive(self, node: int) -> bool:
        return not self._killed[node] and not self.accounts[node].depleted

    def kill(self, node: int) -> None:
        if not self._killed[node]:
            log.debug("node %d died at t=%d us", node, self.sim.now)
        self._killed[node] = True

    def link_tx_cost(self, a: int, b: int, nbytes: int) -> float:
        return self.energy_model.tx_cost(nbytes, self.topology.distance(a, b))

    def mac_transmit(
        self, sender: int, packet: Packet, destination: Optional[int] = None
    ) -> List[EventHandle]:
        """Send `packet` to one neighbor, or broadcast when `destination` is None."""
        if not self.alive(sender):
            return []
        if destination is not None and destination not in self.topology.neighbors_of(
            sender
        ):
            log.debug(
                "node %d: unicast to non-neighbor %d dropped", sender, destination
            )
            self.ledger.on_routing_failure()
            return []

        if destination is None:
            receivers = self.topology.sorted_neighbors(sender)
            distance = self.topology.radio_range
        else:
            receivers = (destination,)
            distance = self.topology.distance(sender, destination)

        energy = self.accounts[sender].charge(
            "tx", self.energy_model.tx_cost(packet.size, distance)
        )
        self.ledger.on_transmit(sender, packet, self.sim.now)
        self.sim.record(
            sender,
            "tx",
            packet=packet.kind.value,
            bytes=packet.size,
            routing=classify_routing_packet(packet),
            energy=energy,
            unicast=destination is not None,
        )

        handles = []
        for receiver in receivers:
            if self._loss > 0 and self._loss_rng.random() < self._loss:
                continue
            latency = self._base_latency
            if self._jitter:
                latency += round(self._mac_rng.random() * self._jitter)
            handles.append(
                self.sim.schedule_in(
                    latency,
                    receiver,
                    f"rx:{packet.kind.value}",
                    self._deliver,
                    (sender, packet, destination is not None),
                )
            )
        return handles

    def _deliver(self, event: SimEvent) -> None:
        receiver = event.target
        sender, packet, unicast = event.payload
        if not self.alive(receiver):
            if unicast:
                self.sim.schedule_in(
                    self._ack_timeout,
                    sender,
                    "link-failure",
                    self._notify_link_failure,
                    (receiver, packet),
                )
            return
        energy = self.accounts[receiver].charge(
            "rx", self.energy_model.rx_cost(packet.size)
        )
        self.ledger.on_receive(receiver, packet, self.sim.now)
        self.sim.record(receiver, "rx", bytes=packet.size, energy=energy)
        if self._on_receive is not None:
            self._on_receive(receiver, sender, packet)

    def _notify_link_failure(self, event: SimEvent) -> None:
        sender = event.target
        neighbor, packet = event.payload
        if self.alive(sender) and self._on_link_failure is not None:
            self._on_link_failure(sender, neighbor, packet)
