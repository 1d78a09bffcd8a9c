"""First-order radio energy model and per-node energy accounts."""

from dataclasses import dataclass
from typing import Literal

from wsnsim.utils.settings_models import EnergySettings

DebitKind = Literal["tx", "rx"]


@dataclass(frozen=True)
class EnergyModel:
    e_elec: float
    eps_amp: float

    @classmethod
    def from_settings(cls, settings: EnergySettings) -> "EnergyModel":
        return cls(settings.e_elec_j_per_bit, settings.eps_amp_j_per_bit_m2)

    def tx_cost(self, nbytes: int, distance: float) -> float:
        bits = 8 * nbytes
        return self.e_elec * bits + self.eps_amp * bits * distance * distance

    def rx_cost(self, nbytes: int) -> float:
        return self.e_elec * 8 * nbytes


@dataclass
class EnergyAccount:
    initial: float
    consumed: float = 0.0
    tx_count: int = 0
    rx_count: int = 0

    @property
    def remaining(self) -> float:
        return max(0.0, self.initial - self.consumed)

    @property
    def depleted(self) -> bool:
        return self.consumed >= self.initial

    def debit(self, amount: float) -> float:
        """Debit up to the remaining energy; returns what was actually taken."""
        left = self.initial - self.consumed
        if left <= 0:
            return 0.0
        if amount >= left:
            self.consumed = self.initial
            return left
        self.consumed += amount
        return amount

    def charge(self, kind: DebitKind, amount: float) -> float:
        """Debit one tx/rx and count it; returns the energy actually taken."""
        if kind == "tx":
            self.tx_count += 1
        else:
            self.rx_count += 1
        return self.debit(amount)


def energy_debit(
    account: EnergyAccount,
    kind: DebitKind,
    nbytes: int,
    distance: float,
    model: EnergyModel,
) -> EnergyAccount:
    """Charge one transmission or reception against `account`."""
    cost = model.tx_cost(nbytes, distance) if kind == "tx" else model.rx_cost(nbytes)
    account.charge(kind, cost)
    return account
