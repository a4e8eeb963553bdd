"""Outcome classification and batch experiments.

Final swarm configurations are labeled per shape family (cluster counting
for ellipse/discs/lines, the final x-skewness sign bands for the
quarter-moon), per-class moment statistics are aggregated over runs, and
the experiment harness reproduces the unbiased-vs-biased outcome tables.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import fieldexpr, initcond, sim
from .fieldexpr import FieldExpr
from .initcond import ConstraintSpec
from .moments import CHANNELS, moments_1d
from .sim import RunLog, SimParams
from .spatial import SpatialHash

FAMILIES = fieldexpr.PRESET_NAMES

# quarter-moon final-state skewness bands: below -> left-pointing, above ->
# right-pointing, between -> indeterminate
QUARTERMOON_LEFT_MAX = -0.15
QUARTERMOON_RIGHT_MIN = 0.15


@dataclass(frozen=True)
class OutcomeLabel:
    family: str
    label: str
    clusters: int | None = None
    skew_x: float | None = None


def cluster_count(positions: np.ndarray, link_distance: float) -> int:
    """Connected components under pairwise distance <= link_distance."""
    if link_distance <= 0:
        raise ValueError("link_distance must be positive")
    pos = np.asarray(positions, dtype=float)
    n = pos.shape[0]
    if n == 0:
        return 0
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    grid = SpatialHash(pos, link_distance, max(1000.0, pos.max() + 1.0))
    for i in range(n):
        for j in grid.query(pos[i], link_distance, exclude=i):
            if j > i:
                ra, rb = find(i), find(int(j))
                if ra != rb:
                    parent[rb] = ra
    return len({find(i) for i in range(n)})


def classify(
    positions: np.ndarray,
    family: str,
    radius: float = 5.0,
    link_distance: float | None = None,
) -> OutcomeLabel:
    """Label a final configuration for its shape family."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    pos = np.asarray(positions, dtype=float)
    if family == "quartermoon":
        skew = moments_1d(pos[:, 0]).m3
        if skew <= QUARTERMOON_LEFT_MAX:
            label = "left-pointing"
        elif skew >= QUARTERMOON_RIGHT_MIN:
            label = "right-pointing"
        else:
            label = "indeterminate"
        return OutcomeLabel(family, label, skew_x=float(skew))
    if link_distance is None:
        link_distance = 2.0 * radius + 1.0
    k = cluster_count(pos, link_distance)
    if family == "ellipse":
        label = "single-ellipse" if k == 1 else ("two-ellipses" if k == 2 else "other")
    elif family == "discs":
        label = f"{k}-discs"
    else:  # lines
        label = "one-line" if k == 1 else ("two-lines" if k == 2 else "indeterminate")
    return OutcomeLabel(family, label, clusters=k)


@dataclass
class ClassMomentStats:
    """Per class and record step: mean and std of each moment channel."""

    steps: list[int]
    classes: list[str]
    mean: dict[str, np.ndarray]  # class -> (n_steps, 8)
    std: dict[str, np.ndarray]

    def rows(self):
        """(step, channel, class, mean, std) rows in a stable order."""
        for si, step in enumerate(self.steps):
            for ci, channel in enumerate(CHANNELS):
                for cls in self.classes:
                    yield step, channel, cls, self.mean[cls][si, ci], self.std[cls][si, ci]


def class_moment_stats(logs: Sequence[RunLog], labels: Sequence[str]) -> ClassMomentStats:
    """Aggregate the moment tracks of labeled runs per class.

    All logs must share the same record schedule; every class needs at
    least two members for a standard deviation to mean anything.
    """
    if len(logs) != len(labels):
        raise ValueError("one label per log required")
    if not logs:
        raise ValueError("no logs given")
    steps = logs[0].record_steps
    for log in logs[1:]:
        if log.record_steps != steps:
            raise ValueError("logs have mismatched record schedules")
    by_class: dict[str, list[np.ndarray]] = {}
    for log, cls in zip(logs, labels):
        track = np.stack([m.as_array() for _, m in log.records])
        by_class.setdefault(cls, []).append(track)
    mean: dict[str, np.ndarray] = {}
    std: dict[str, np.ndarray] = {}
    for cls, tracks in by_class.items():
        if len(tracks) < 2:
            raise ValueError(f"class {cls!r} has fewer than 2 runs")
        stack = np.stack(tracks)
        mean[cls] = stack.mean(axis=0)
        std[cls] = stack.std(axis=0)
    return ClassMomentStats(list(steps), sorted(by_class), mean, std)


def distinguishing_moment(stats: ClassMomentStats) -> tuple[str, int, float]:
    """The channel whose final-step mean+-std bands separate the two classes
    most, scored as the band gap over the pooled std.

    Ties break toward the lower moment index, x before y; a score <= 0
    means every channel's bands overlap.
    """
    if len(stats.classes) != 2:
        raise ValueError("exactly two classes required")
    a, b = stats.classes
    best: tuple[str, int, float] | None = None
    for ci, channel in enumerate(CHANNELS):
        ma, sa = stats.mean[a][-1, ci], stats.std[a][-1, ci]
        mb, sb = stats.mean[b][-1, ci], stats.std[b][-1, ci]
        if not all(np.isfinite(v) for v in (ma, sa, mb, sb)):
            continue
        gap = abs(ma - mb) - (sa + sb)
        pooled = np.sqrt((sa * sa + sb * sb) / 2.0)
        score = gap / pooled if pooled > 0 else gap
        if best is None or score > best[2]:
            moment = ci // 2 + 1
            axis = "x" if ci % 2 == 0 else "y"
            best = (axis, moment, float(score))
    if best is None:
        raise ValueError("no finite channel to compare")
    return best


# ---------------------------------------------------------------------------
# Batch experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    family: str
    params: SimParams
    seeds: tuple[int, ...]
    constraint: ConstraintSpec | None = None  # None -> uniform initial conditions
    region: tuple[float, float] | None = None
    field: str | None = None  # expression text override; default: family preset
    snapshot_count: int = 0

    def field_expr(self) -> FieldExpr:
        if self.field is not None:
            return fieldexpr.parse(self.field)
        return fieldexpr.preset(self.family)


@dataclass
class RunOutcome:
    seed: int
    label: OutcomeLabel | None
    log: RunLog | None
    error: str | None = None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    outcomes: list[RunOutcome]

    @property
    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for oc in self.outcomes:
            if oc.label is not None:
                out[oc.label.label] = out.get(oc.label.label, 0) + 1
        return dict(sorted(out.items()))

    @property
    def percentages(self) -> dict[str, float]:
        counts = self.counts
        total = sum(counts.values())
        if total == 0:
            return {}
        return {k: 100.0 * v / total for k, v in counts.items()}

    @property
    def failures(self) -> list[RunOutcome]:
        return [oc for oc in self.outcomes if oc.error is not None]


def _run_single(config: ExperimentConfig, seed: int) -> RunOutcome:
    params = replace(config.params, seed=seed)
    try:
        if config.constraint is None:
            ic = initcond.uniform_ic(params.n, config.region, params.radius, seed=seed)
        else:
            ic = initcond.generate_biased(
                config.constraint, params.n, params.radius, seed=seed, region=config.region
            )
        snaps = sim.snapshot_schedule(params.steps, config.snapshot_count)
        log = sim.run(ic, config.field_expr(), params, snapshot_steps=snaps)
        label = classify(log.final.positions, config.family, params.radius)
        return RunOutcome(seed, label, log)
    except (ValueError, initcond.GenerationError) as exc:
        return RunOutcome(seed, None, None, error=str(exc))


def experiment(config: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Run the seeded batch, classify every final state, aggregate counts.

    Runs are independent; `jobs > 1` fans them out to a process pool. The
    aggregate is reduced in seed order either way, so results are
    reproducible per seed list.
    """
    if not config.seeds:
        raise ValueError("seed list must be nonempty")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_single, [config] * len(config.seeds), config.seeds))
    else:
        outcomes = [_run_single(config, s) for s in config.seeds]
    return ExperimentResult(config, outcomes)
