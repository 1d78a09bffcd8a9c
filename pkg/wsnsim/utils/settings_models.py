from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class RadioSettings(_Frozen):
    # carrier and antenna height are recorded metadata only; propagation is a disc
    carrier_mhz: float = Field(default=954.0, gt=0)
    antenna_height_m: float = Field(default=1.9, ge=0)
    range_m: float = Field(default=271.3, gt=0)
    loss: float = Field(default=0.0, ge=0, le=1)


class MacSettings(_Frozen):
    base_latency_s: float = Field(default=0.002, ge=0)
    jitter_s: float = Field(default=0.002, ge=0)
    ack_timeout_s: float = Field(default=0.010, gt=0)


class EnergySettings(_Frozen):
    initial_j: float = Field(default=2.0, gt=0)
    e_elec_j_per_bit: float = Field(default=50e-9, ge=0)
    eps_amp_j_per_bit_m2: float = Field(default=100e-12, ge=0)


class PacketSettings(_Frozen):
    data_bytes: int = Field(default=64, gt=0)
    control_bytes: int = Field(default=36, gt=0)


class MetricSettings(_Frozen):
    sample_interval_s: float = Field(default=0.1, gt=0)
    network_speed_bps: float = Field(default=2_000_000.0, gt=0)


class FdddpSettings(_Frozen):
    interest_refresh_s: float = Field(default=30.0, gt=0)
    exploratory_every: int = Field(default=10, ge=1)
    # multiples of the data interval
    repair_timeout_factor: float = Field(default=3.0, gt=0)
    buffer_size: int = Field(default=16, ge=1)


class DddpSettings(_Frozen):
    cells: Optional[int] = Field(default=None, ge=1)
    cell_side_m: Optional[float] = Field(default=None, gt=0)
    query_refresh_s: float = Field(default=30.0, gt=0)
    # fraction of the radio range around an edge midpoint that may claim CN
    claim_radius_factor: float = Field(default=1.0, gt=0)
    settle_s: float = Field(default=1.0, ge=0)
    buffer_size: int = Field(default=16, ge=1)

    @model_validator(mode="after")
    def _one_geometry_source(self):
        if self.cells is not None and self.cell_side_m is not None:
            raise ValueError("set either dddp.cells or dddp.cell_side_m, not both")
        return self


class CbddpSettings(_Frozen):
    beta: float = Field(default=0.5, ge=0)
    threshold: float = Field(default=0.0)
    refresh_timeout_s: float = Field(default=10.0, gt=0)
    advert_backoff_s: float = Field(default=0.05, ge=0)
    # a forwarder that overhears no expected downhill rebroadcast this many
    # times in a row asks the consumer for a refresh
    overhear_timeout_s: float = Field(default=0.1, gt=0)
    miss_limit: int = Field(default=3, ge=1)
    buffer_size: int = Field(default=16, ge=1)


class EagddpSettings(_Frozen):
    mu: float = Field(default=0.5, ge=0, le=1)
    region_side_m: Optional[float] = Field(default=None, gt=0)
    advert_interval_s: float = Field(default=1.0, gt=0)
    # fraction of the initial energy
    energy_advert_step: float = Field(default=0.05, gt=0)
    loop_factor: int = Field(default=4, ge=1)


class SimulationSettings(_Frozen):
    duration_s: float = Field(default=500.0, gt=0)
    data_interval_s: float = Field(default=2.0, gt=0)
    data_start_s: float = Field(default=0.0, ge=0)
    wall_time_budget_s: Optional[float] = Field(default=60.0, gt=0)


class RunSettings(_Frozen):
    """Every knob a single simulation run depends on."""

    simulation: SimulationSettings = SimulationSettings()
    radio: RadioSettings = RadioSettings()
    mac: MacSettings = MacSettings()
    energy: EnergySettings = EnergySettings()
    packet: PacketSettings = PacketSettings()
    metrics: MetricSettings = MetricSettings()
    fdddp: FdddpSettings = FdddpSettings()
    dddp: DddpSettings = DddpSettings()
    cbddp: CbddpSettings = CbddpSettings()
    eagddp: EagddpSettings = EagddpSettings()

    def with_overrides(self, overrides: dict) -> "RunSettings":
        """Apply `{"section.field": value}` overrides, validating the result."""
        data = self.model_dump()
        for dotted, value in overrides.items():
            section, _, field = dotted.partition(".")
            if section not in data or not field or field not in data[section]:
                raise KeyError(dotted)
            data[section][field] = value
        return RunSettings.model_validate(data)
