from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Tuple


class PacketKind(str, Enum):
    INTEREST = "interest"
    EXPLORATORY = "exploratory"
    REINFORCEMENT = "reinforcement"
    QUERY = "query"
    ADVERTISEMENT = "advertisement"
    DATA = "data"
    COST_UPDATE = "cost-update"
    REPAIR = "repair"
    CELL_CONSTRUCTION = "cell-construction"
    REFRESH_REQUEST = "refresh-request"


@dataclass(frozen=True)
class Packet:
    kind: PacketKind
    origin: int
    seq: int
    size: int
    hop_count: int = 0
    header: Any = None

    @property
    def key(self) -> Tuple[int, int]:
        """(origin, seq) identity of the logical packet."""
        return self.origin, self.seq

    def forwarded(self, **header_changes: Any) -> "Packet":
        """Copy for the next hop: hop count +1 and optionally a new header."""
        header = self.header
        if header_changes:
            header = replace(header, **header_changes)
        return replace(self, hop_count=self.hop_count + 1, header=header)


def classify_routing_packet(packet: Packet) -> bool:
    """True for every control kind; only data packets are not routing overhead."""
    return packet.kind is not PacketKind.DATA
