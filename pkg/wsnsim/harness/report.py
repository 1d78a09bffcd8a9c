"""Cross-protocol comparison: per-metric rankings, pairwise deltas and a
best/worst summary grid."""

from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
from rich.console import Console
from rich.table import Table

from wsnsim.errors import ReportError
from wsnsim.metrics import RunResult
from wsnsim.utils.console import get_logger, get_recording_console

log = get_logger(__name__)


@dataclass(frozen=True)
class MetricSpec:
    key: str
    title: str
    # smaller score ranks first
    score: Callable[[float], float]
    fmt: str = "{:.4g}"

    def value(self, result: RunResult) -> Optional[float]:
        if self.key == "unique_fraction":
            return result.unique_fraction
        value = getattr(result, self.key)
        return None if value is None else float(value)


METRICS: Tuple[MetricSpec, ...] = (
    MetricSpec("r_oh", "Routing overhead", score=lambda v: v, fmt="{:.1f}"),
    # the ideal ratio is 1; duplicates push it above
    MetricSpec("dr", "Delivery ratio", score=lambda v: abs(v - 1.0), fmt="{:.3f}"),
    MetricSpec("unique_fraction", "Unique delivery", score=lambda v: -v, fmt="{:.3f}"),
    MetricSpec("e_avg_j", "Energy consumption (J)", score=lambda v: v, fmt="{:.4g}"),
    MetricSpec(
        "band_util_pct", "Bandwidth utilization (%)", score=lambda v: v, fmt="{:.4g}"
    ),
)


@dataclass(frozen=True)
class MetricStat:
    mean: float
    std: float
    n: int


@dataclass(frozen=True)
class PairDelta:
    metric: str
    protocol: str
    baseline: str
    percent: float

    def describe(self) -> str:
        if self.percent == 0:
            return f"{self.protocol.upper()} equal to {self.baseline.upper()}"
        word = "smaller" if self.percent < 0 else "larger"
        return (
            f"{self.protocol.upper()} {abs(self.percent):.1f}% {word} than "
            f"{self.baseline.upper()}"
        )


@dataclass(frozen=True)
class ComparisonReport:
    protocols: Tuple[str, ...]
    runs: Tuple[Tuple[int, int], ...]
    stats: Dict[str, Dict[str, MetricStat]]
    rankings: Dict[str, Tuple[Tuple[str, ...], ...]]
    deltas: Tuple[PairDelta, ...]
    grid: Dict[str, Dict[str, str]]
    by_nodes: Dict[str, Dict[int, Dict[str, float]]]

    def delta(self, metric: str, protocol: str, baseline: str) -> Optional[PairDelta]:
        for delta in self.deltas:
            if (delta.metric, delta.protocol, delta.baseline) == (
                metric,
                protocol,
                baseline,
            ):
                return delta
        return None


def percent_difference(x: float, y: float) -> Optional[float]:
    """(x - y) / y * 100; None when y is 0."""
    if y == 0:
        return None
    return (x - y) / y * 100


def _stat(values: Sequence[float]) -> MetricStat:
    data = np.asarray(values, dtype=float)
    std = float(np.std(data, ddof=1)) if data.size > 1 else 0.0
    return MetricStat(float(np.mean(data)), std, int(data.size))


def _rank(
    spec: MetricSpec, stats: Dict[str, MetricStat]
) -> Tuple[Tuple[str, ...], ...]:
    """Protocols best first; protocols with equal means share a tier."""
    ordered = sorted(stats, key=lambda p: (spec.score(stats[p].mean), p))
    tiers: List[List[str]] = []
    for protocol in ordered:
        if tiers and stats[tiers[-1][0]].mean == stats[protocol].mean:
            tiers[-1].append(protocol)
        else:
            tiers.append([protocol])
    return tuple(tuple(tier) for tier in tiers)


def qualitative_grid(
    rankings: Dict[str, Tuple[Tuple[str, ...], ...]]
) -> Dict[str, Dict[str, str]]:
    grid: Dict[str, Dict[str, str]] = {}
    for metric, tiers in rankings.items():
        labels: Dict[str, str] = {}
        if len(tiers) == 1:
            labels = {p: "Tie" for p in tiers[0]}
        else:
            for index, tier in enumerate(tiers):
                label = "Average"
                if index == 0:
                    label = "Best"
                elif index == len(tiers) - 1:
                    label = "Worst"
                labels.update({p: label for p in tier})
        grid[metric] = labels
    return grid


def comparison_report(results: Iterable[RunResult]) -> ComparisonReport:
    results = list(results)
    # attempted runs, failed ones included, must line up across protocols
    runs_by_protocol: Dict[str, Set[Tuple[int, int]]] = defaultdict(set)
    for result in results:
        runs_by_protocol[result.protocol].add((result.nodes, result.seed))
    protocols = tuple(sorted(runs_by_protocol))
    if not protocols:
        raise ReportError("no completed runs to compare")
    reference = runs_by_protocol[protocols[0]]
    for protocol in protocols[1:]:
        runs = runs_by_protocol[protocol]
        if runs != reference:
            missing = sorted(reference ^ runs)[:5]
            raise ReportError(
                f"{protocols[0]} and {protocol} ran on different (nodes, seed) sets; "
                f"first differences: {missing}"
            )

    failed = {(r.nodes, r.seed) for r in results if not r.ok}
    if failed:
        log.warning(
            "dropping %d (nodes, seed) pairs with a failed run: %s",
            len(failed),
            sorted(failed)[:5],
        )
    reference = reference - failed
    completed = [r for r in results if (r.nodes, r.seed) in reference]
    if not completed:
        raise ReportError("no completed runs to compare")

    stats: Dict[str, Dict[str, MetricStat]] = {}
    by_nodes: Dict[str, Dict[int, Dict[str, float]]] = {}
    for spec in METRICS:
        values: Dict[str, List[float]] = defaultdict(list)
        per_row: Dict[int, Dict[str, List[float]]] = defaultdict(
            lambda: defaultdict(list)
        )
        for result in completed:
            value = spec.value(result)
            if value is not None:
                values[result.protocol].append(value)
                per_row[result.nodes][result.protocol].append(value)
        if not values:
            continue
        stats[spec.key] = {p: _stat(v) for p, v in sorted(values.items())}
        by_nodes[spec.key] = {
            nodes: {p: float(np.mean(v)) for p, v in sorted(row.items())}
            for nodes, row in sorted(per_row.items())
        }

    rankings = {
        spec.key: _rank(spec, stats[spec.key]) for spec in METRICS if spec.key in stats
    }
    deltas: List[PairDelta] = []
    for metric, metric_stats in stats.items():
        for protocol in metric_stats:
            for baseline in metric_stats:
                if protocol == baseline:
                    continue
                pct = percent_difference(
                    metric_stats[protocol].mean, metric_stats[baseline].mean
                )
                if pct is not None:
                    deltas.append(PairDelta(metric, protocol, baseline, pct))

    return ComparisonReport(
        protocols=protocols,
        runs=tuple(sorted(reference)),
        stats=stats,
        rankings=rankings,
        deltas=tuple(deltas),
        grid=qualitative_grid(rankings) if len(protocols) > 1 else {},
        by_nodes=by_nodes,
    )


def _ranking_text(tiers: Tuple[Tuple[str, ...], ...]) -> str:
    return " < ".join(" = ".join(p.upper() for p in tier) for tier in tiers)


def render_report(report: ComparisonReport, console: Console) -> None:
    specs = [spec for spec in METRICS if spec.key in report.stats]
    seeds = sorted({seed for _, seed in report.runs})
    rows = sorted({nodes for nodes, _ in report.runs})
    console.print(
        f"Comparison of {', '.join(p.upper() for p in report.protocols)} over "
        f"{len(rows)} topology row(s) and {len(seeds)} seed(s)",
        style="bold cyan",
    )

    summary = Table(title="Mean ± std across runs", header_style="bold blue")
    summary.add_column("Metric", style="magenta")
    for protocol in report.protocols:
        summary.add_column(protocol.upper(), justify="right")
    for spec in specs:
        cells = []
        for protocol in report.protocols:
            stat = report.stats[spec.key].get(protocol)
            if stat is None:
                cells.append("-")
            else:
                mean, std = spec.fmt.format(stat.mean), spec.fmt.format(stat.std)
                cells.append(f"{mean} ± {std}")
        summary.add_row(spec.title, *cells)
    console.print(summary)

    if len(report.protocols) > 1:
        console.print("Rankings (best first):", style="bold")
        for spec in specs:
            console.print(f"  {spec.title}: {_ranking_text(report.rankings[spec.key])}")

        grid = Table(title="Summary of protocols", header_style="bold blue")
        grid.add_column("Metric", style="magenta")
        for protocol in report.protocols:
            grid.add_column(protocol.upper(), justify="center")
        for spec in specs:
            labels = report.grid[spec.key]
            grid.add_row(spec.title, *(labels.get(p, "-") for p in report.protocols))
        console.print(grid)

        console.print("Pairwise differences of means:", style="bold")
        for spec in specs:
            for delta in report.deltas:
                if delta.metric == spec.key:
                    console.print(f"  {spec.title}: {delta.describe()}")

    if len(rows) > 1:
        for spec in specs:
            table = Table(title=f"{spec.title} by node count", header_style="bold blue")
            table.add_column("Nodes", justify="right")
            for protocol in report.protocols:
                table.add_column(protocol.upper(), justify="right")
            for nodes, means in report.by_nodes[spec.key].items():
                table.add_row(
                    str(nodes),
                    *(
                        spec.fmt.format(means[p]) if p in means else "-"
                        for p in report.protocols
                    ),
                )
            console.print(table)


def report_text(report: ComparisonReport, width: int = 120) -> str:
    recorder = get_recording_console(width=width)
    render_report(report, recorder)
    return recorder.export_text()
