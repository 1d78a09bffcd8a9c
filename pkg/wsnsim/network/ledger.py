from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Tuple

from wsnsim.engine import SimTime


@dataclass
class LinkByteLedger:
    """Network-wide bytes in/out per contiguous sampling interval."""

    interval: SimTime
    network_speed_bps: float
    _samples: Dict[int, List[int]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.interval <= 0:
            raise ValueError("sampling interval must be positive")

    def _bucket(self, at: SimTime) -> List[int]:
        return self._samples.setdefault(at // self.interval, [0, 0])

    def credit_in(self, at: SimTime, nbytes: int) -> None:
        self._bucket(at)[0] += nbytes

    def credit_out(self, at: SimTime, nbytes: int) -> None:
        self._bucket(at)[1] += nbytes

    def cycle_count(self, duration: SimTime) -> int:
        """Complete sampling cycles in a run of `duration`."""
        return duration // self.interval

    def cycles(self, duration: SimTime) -> Iterator[Tuple[int, int]]:
        """(bytes_in, bytes_out) for every complete cycle, empty ones included."""
        for index in range(self.cycle_count(duration)):
            bytes_in, bytes_out = self._samples.get(index, (0, 0))
            yield bytes_in, bytes_out

    @property
    def total_in(self) -> int:
        return sum(sample[0] for sample in self._samples.values())

    @property
    def total_out(self) -> int:
        return sum(sample[1] for sample in self._samples.values())
