"""Scenario files: flat `key=value` lines, `#` comments.

Top-level keys name the run (`protocol`, `nodes`, `width`, `height`,
`seeds`, `faults`, `topology`, `duration_s`, `data_interval_s`); dotted keys
(`cbddp.beta`, `radio.range_m`, ...) override one field of the run settings.
"""

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from wsnsim.errors import ScenarioError, TopologyError
from wsnsim.network.topology import (
    TOPOLOGY_ROWS,
    Topology,
    generate_topology,
    load_topology,
)
from wsnsim.protocols.base import Fault
from wsnsim.protocols.registry import PROTOCOL_NAMES
from wsnsim.utils.settings_models import RunSettings

DEFAULT_SEEDS: Tuple[int, ...] = tuple(range(1, 11))

# short top-level aliases for the most common simulation settings
_ALIASES = {
    "duration_s": "simulation.duration_s",
    "data_interval_s": "simulation.data_interval_s",
}
_TOP_LEVEL = ("protocol", "nodes", "width", "height", "seeds", "faults", "topology")


class Scenario(BaseModel):
    model_config = ConfigDict(frozen=True)

    protocol: str
    nodes: int
    width: float = Field(gt=0)
    height: float = Field(gt=0)
    seeds: Tuple[int, ...] = DEFAULT_SEEDS
    faults: Tuple[Fault, ...] = ()
    topology_path: Optional[Path] = None
    settings: RunSettings = RunSettings()

    @field_validator("protocol")
    @classmethod
    def _known_protocol(cls, value: str) -> str:
        value = value.lower()
        if value not in PROTOCOL_NAMES:
            raise ValueError(f"unknown protocol {value!r}")
        return value

    @field_validator("nodes")
    @classmethod
    def _positive_nodes(cls, value: int) -> int:
        if value < 1:
            raise ValueError("nodes must be positive")
        return value

    @field_validator("seeds")
    @classmethod
    def _some_seeds(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if not value:
            raise ValueError("at least one seed is required")
        return value

    @model_validator(mode="after")
    def _faults_name_nodes(self):
        for node, _ in self.faults:
            if not 0 <= node < self.nodes:
                raise ValueError(f"fault names unknown node {node}")
        return self

    @classmethod
    def for_row(
        cls,
        protocol: str,
        nodes: int,
        seeds: Sequence[int] = DEFAULT_SEEDS,
        settings: Optional[RunSettings] = None,
        faults: Sequence[Fault] = (),
    ) -> "Scenario":
        """Scenario for one benchmark topology row, with its DDDP cell count."""
        row = TOPOLOGY_ROWS.get(nodes)
        if row is None:
            raise ScenarioError(f"no benchmark row for {nodes} nodes")
        return cls(
            protocol=protocol,
            nodes=nodes,
            width=row.width,
            height=row.height,
            seeds=tuple(seeds),
            faults=tuple(faults),
            settings=_with_row_cells(settings or RunSettings(), nodes),
        )

    def with_protocol(self, protocol: str) -> "Scenario":
        return Scenario.model_validate({**self.model_dump(), "protocol": protocol})

    def topology(self, seed: int) -> Topology:
        """The placement every protocol sees for `seed`."""
        if self.topology_path is not None:
            return load_topology(self.topology_path)
        return generate_topology(
            self.nodes, self.width, self.height, self.settings.radio.range_m, seed
        )


def _with_row_cells(settings: RunSettings, nodes: int) -> RunSettings:
    dddp = settings.dddp
    row = TOPOLOGY_ROWS.get(nodes)
    if row is None or dddp.cells is not None or dddp.cell_side_m is not None:
        return settings
    return settings.with_overrides({"dddp.cells": row.cells})


def parse_seeds(text: str) -> Tuple[int, ...]:
    """`1-10`, `3`, or `1,4,7-9`."""
    seeds: List[int] = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        if "-" in part:
            start, end = part.split("-", 1)
            low, high = int(start), int(end)
            if low > high:
                raise ValueError(f"invalid seed range {part!r}")
            seeds.extend(range(low, high + 1))
        else:
            seeds.append(int(part))
    return tuple(dict.fromkeys(seeds))


def parse_faults(text: str) -> Tuple[Fault, ...]:
    """`id@time` entries separated by commas, e.g. `3@100,7@250.5`."""
    faults: List[Fault] = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        node, sep, at = part.partition("@")
        if not sep:
            raise ValueError(f"fault {part!r} is not 'id@time'")
        when = float(at)
        if when < 0:
            raise ValueError(f"fault time must be nonnegative in {part!r}")
        faults.append((int(node), when))
    return tuple(faults)


def _parse_value(value: str) -> Optional[str]:
    return None if value.lower() in ("none", "null", "") else value


def loads_scenario(text: str, base_dir: Optional[Path] = None) -> Scenario:
    entries: Dict[str, Tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ScenarioError(f"expected key=value, got {raw.strip()!r}", lineno)
        key = _ALIASES.get(key, key)
        if key in entries:
            raise ScenarioError(f"duplicate key {key!r}", lineno)
        if "." not in key and key not in _TOP_LEVEL:
            raise ScenarioError(f"unknown key {key!r}", lineno)
        entries[key] = (value, lineno)

    def line_of(key: str) -> Optional[int]:
        entry = entries.get(key)
        return entry[1] if entry else None

    if "protocol" not in entries:
        raise ScenarioError("missing required key 'protocol'")
    protocol = entries["protocol"][0].lower()
    if protocol not in PROTOCOL_NAMES:
        raise ScenarioError(f"unknown protocol {protocol!r}", line_of("protocol"))

    overrides = {
        key: _parse_value(value) for key, (value, _) in entries.items() if "." in key
    }
    try:
        settings = RunSettings().with_overrides(overrides)
    except KeyError as e:
        key = e.args[0]
        raise ScenarioError(f"unknown key {key!r}", line_of(key)) from None
    except ValidationError as e:
        error = e.errors()[0]
        key = ".".join(str(part) for part in error["loc"])
        raise ScenarioError(f"{key}: {error['msg']}", line_of(key)) from None

    fields: Dict[str, object] = {"protocol": protocol, "settings": settings}
    for key, parse in (("seeds", parse_seeds), ("faults", parse_faults)):
        if key in entries:
            try:
                fields[key] = parse(entries[key][0])
            except ValueError as e:
                raise ScenarioError(f"{key}: {e}", line_of(key)) from None

    if "topology" in entries:
        path = Path(entries["topology"][0])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        try:
            topology = load_topology(path)
        except (OSError, TopologyError) as e:
            raise ScenarioError(
                f"cannot load topology: {e}", line_of("topology")
            ) from None
        fields.update(
            topology_path=path,
            nodes=topology.size,
            width=topology.width,
            height=topology.height,
        )
    else:
        if "nodes" not in entries:
            raise ScenarioError("missing required key 'nodes'")
        try:
            nodes = int(entries["nodes"][0])
        except ValueError:
            raise ScenarioError("nodes must be an integer", line_of("nodes")) from None
        row = TOPOLOGY_ROWS.get(nodes)
        width = entries.get("width", (row.width if row else None, 0))[0]
        height = entries.get("height", (row.height if row else None, 0))[0]
        if width is None or height is None:
            raise ScenarioError(
                f"no benchmark row for {nodes} nodes; give width and height",
                line_of("nodes"),
            )
        fields.update(nodes=nodes, width=width, height=height)
        fields["settings"] = _with_row_cells(settings, nodes)

    try:
        return Scenario.model_validate(fields)
    except ValidationError as e:
        error = e.errors()[0]
        key = str(error["loc"][0]) if error["loc"] else "faults"
        raise ScenarioError(f"{key}: {error['msg']}", line_of(key)) from None


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ScenarioError(f"cannot read scenario {path}: {e}") from None
    return loads_scenario(text, base_dir=path.parent)
