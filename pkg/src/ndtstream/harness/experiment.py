"""Scenario x controller x seed sweeps and the comparison tables built from them."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .. import __version__
from ..control import QLearning, make_policy
from ..netmodel import LinkTrace, ScenarioKind, gen_scenario
from ..sim import SessionLog, run_session
from .config import ExperimentConfig, echo

METRICS = ("qoe", "startup_s", "rebuffer_s", "mean_bitrate_kbps", "switches", "forecast_mae_kbps")

# Q-learning trains on traces whose seeds live far above any evaluation seed
TRAIN_SEED_BASE = 2**63


@dataclass(frozen=True)
class Row:
    scenario: str
    controller: str
    seed: int
    qoe: float
    startup_s: float
    rebuffer_s: float
    mean_bitrate_kbps: float
    switches: int
    forecast_mae_kbps: Optional[float]
    complete: bool


@dataclass(frozen=True)
class Aggregate:
    scenario: str
    controller: str
    n: int
    incomplete: int
    median: dict
    mean: dict


@dataclass(frozen=True)
class Report:
    rows: tuple
    aggregates: tuple
    config: dict
    version: str

    def aggregate(self, scenario: str, controller: str) -> Aggregate:
        for a in self.aggregates:
            if a.scenario == scenario and a.controller == controller:
                return a
        raise KeyError((scenario, controller))

    @property
    def controllers(self) -> list[str]:
        return list(dict.fromkeys(a.controller for a in self.aggregates))

    @property
    def scenarios(self) -> list[str]:
        return list(dict.fromkeys(a.scenario for a in self.aggregates))


def lower_median(values: Sequence[float]) -> float:
    """Median of the sorted values; the lower-middle element for even counts."""
    if not values:
        raise ValueError("median of nothing")
    s = sorted(values)
    return s[(len(s) - 1) // 2]


def row_from_log(scenario: str, seed: int, log: SessionLog) -> Row:
    mae = log.forecast_reports[0].mae / 1e3 if log.forecast_reports else None
    return Row(
        scenario, log.controller, seed, log.qoe, log.startup_delay, log.experienced_rebuffer,
        log.mean_bitrate / 1e3, log.switches, mae, log.complete,
    )


def aggregate_rows(rows: Sequence[Row]) -> tuple[Aggregate, ...]:
    """Per (scenario, controller) medians and means, in first-seen order."""
    groups: dict[tuple[str, str], list[Row]] = {}
    for r in rows:
        groups.setdefault((r.scenario, r.controller), []).append(r)
    out = []
    for (sc, ctl), rs in groups.items():
        med, mean = {}, {}
        for m in METRICS:
            vals = [getattr(r, m) for r in rs if getattr(r, m) is not None]
            med[m] = lower_median(vals) if vals else None
            mean[m] = math.fsum(vals) / len(vals) if vals else None
        out.append(Aggregate(sc, ctl, len(rs), sum(not r.complete for r in rs), med, mean))
    return tuple(out)


def _run_one(task) -> Row:
    scenario, seed, trace, kind, cfg, qtable = task
    ctl = kind
    if qtable is not None:
        ctl = make_policy(kind, cfg.ladder, cfg.device, cfg.session, cfg.weights, seed,
                          table=qtable.copy(), training=False)
    log = run_session(trace, cfg.ladder, cfg.device, ctl, cfg.session, cfg.twin, seed, cfg.weights)
    return row_from_log(scenario, seed, log)


def train_qlearning(kind: QLearning, scenario: ScenarioKind, cfg: ExperimentConfig) -> np.ndarray:
    """Q table after ``kind.params.episodes`` training sessions on fresh traces of ``scenario``."""
    p = kind.params
    table = None
    for ep in range(p.episodes):
        seed = TRAIN_SEED_BASE + p.seed * 100_003 + ep
        trace = gen_scenario(scenario, cfg.trace_duration, seed)
        policy = make_policy(kind, cfg.ladder, cfg.device, cfg.session, cfg.weights, seed,
                             table=table, training=True)
        run_session(trace, cfg.ladder, cfg.device, policy, cfg.session, cfg.twin, seed, cfg.weights)
        table = policy.Q
    if table is None:
        table = make_policy(kind, cfg.ladder, cfg.device, cfg.session, cfg.weights).Q
    return table


def run_experiment(cfg: ExperimentConfig, single_thread: bool = False,
                   workers: Optional[int] = None) -> Report:
    """Run every (scenario, controller, seed) session and aggregate.

    Traces are generated once per (scenario, seed) and shared by all
    controllers. Rows come back sorted by (scenario, controller) in config
    order, then by seed, so neither completion order nor seed-list order
    affects the report beyond its config echo.
    """
    traces: dict[tuple[ScenarioKind, int], LinkTrace] = {
        (sc, s): gen_scenario(sc, cfg.trace_duration, s) for sc in cfg.scenarios for s in cfg.seeds
    }
    tables = {
        (sc, k.name): train_qlearning(k, sc, cfg)
        for sc in cfg.scenarios for k in cfg.controllers if isinstance(k, QLearning)
    }
    tasks = [
        (sc.value, s, traces[(sc, s)], k, cfg, tables.get((sc, k.name)))
        for sc in cfg.scenarios for k in cfg.controllers for s in sorted(cfg.seeds)
    ]
    if single_thread or len(tasks) == 1 or workers == 1:
        rows = [_run_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_one, tasks, chunksize=max(1, len(tasks) // 32)))
    return Report(tuple(rows), aggregate_rows(rows), echo(cfg), __version__)


# -- comparison ---------------------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    scenario: str
    qoe_baseline: float
    qoe_proposed: float
    qoe_delta: float
    startup_baseline: float
    startup_proposed: float
    startup_reduction_pct: Optional[float]
    rebuffer_baseline: float
    rebuffer_proposed: float
    rebuffer_reduction_pct: Optional[float]


@dataclass(frozen=True)
class ComparisonTable:
    baseline: str
    proposed: str
    rows: tuple


def reduction_pct(baseline: float, proposed: float) -> Optional[float]:
    """Percent reduction from ``baseline``; None when undefined (zero baseline, nonzero proposed)."""
    if baseline == 0:
        return 0.0 if proposed == 0 else None
    return 100.0 * (baseline - proposed) / baseline


def compare(report: Report, baseline: str, proposed: str) -> ComparisonTable:
    for name in (baseline, proposed):
        if name not in report.controllers:
            raise KeyError(f"controller {name!r} not in report (have {report.controllers})")
    rows = []
    for sc in report.scenarios:
        b = report.aggregate(sc, baseline).median
        p = report.aggregate(sc, proposed).median
        rows.append(ComparisonRow(
            sc, b["qoe"], p["qoe"], p["qoe"] - b["qoe"],
            b["startup_s"], p["startup_s"], reduction_pct(b["startup_s"], p["startup_s"]),
            b["rebuffer_s"], p["rebuffer_s"], reduction_pct(b["rebuffer_s"], p["rebuffer_s"]),
        ))
    return ComparisonTable(baseline, proposed, tuple(rows))


def format_table(table: ComparisonTable) -> str:
    def pct(x):
        return "n/a" if x is None else f"{x:+.1f}%"

    head = (f"{'scenario':<14}{'QoE ' + table.baseline:>20}{'QoE ' + table.proposed:>20}"
            f"{'delta':>8}{'startup s':>16}{'reduction':>11}{'rebuffer s':>18}{'reduction':>11}")
    lines = [head, "-" * len(head)]
    for r in table.rows:
        lines.append(
            f"{r.scenario:<14}{r.qoe_baseline:>20.2f}{r.qoe_proposed:>20.2f}{r.qoe_delta:>+8.2f}"
            f"{r.startup_baseline:>7.2f} -> {r.startup_proposed:<5.2f}{pct(r.startup_reduction_pct):>11}"
            f"{r.rebuffer_baseline:>8.2f} -> {r.rebuffer_proposed:<6.2f}{pct(r.rebuffer_reduction_pct):>11}"
        )
    return "\n".join(lines)
