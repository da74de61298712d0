"""Latency statistics, the schedule validity checker and relative-performance analysis."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import IncompleteGroup
from .model import ClusterConfig, Instance, Violation
from .state import SimResult


@dataclass(frozen=True)
class LatencySummary:
    mean: Fraction
    p95: int
    per_job: dict


@dataclass(frozen=True)
class BoxStats:
    q1: float
    median: float
    q3: float
    whisker_lo: float
    whisker_hi: float
    outliers: tuple

    @property
    def n_outliers(self) -> int:
        return len(self.outliers)


def mean_latency(result: SimResult) -> Fraction:
    """Exact mean of job completion times."""
    lat = result.job_latencies
    return Fraction(sum(lat.values()), len(lat))


def percentile_latency(result: SimResult, p: float) -> int:
    """Nearest-rank percentile of job latencies."""
    if not 0 < p <= 100:
        raise ValueError(f"percentile must be in (0, 100], got {p}")
    values = sorted(result.job_latencies.values())
    rank = math.ceil(Fraction(p) / 100 * len(values))
    return values[max(rank, 1) - 1]


def summarize(result: SimResult) -> LatencySummary:
    return LatencySummary(mean_latency(result), percentile_latency(result, 95), dict(result.job_latencies))


def validate_schedule(instance: Instance, cluster: ClusterConfig, result: SimResult) -> list[Violation]:
    """Check a schedule against the dependency, environment and capacity constraints."""
    out: list[Violation] = []
    records = result.tasks
    tasks = instance.task_by_id
    fams = instance.family_by_id

    missing = set(tasks) - set(records)
    extra = set(records) - set(tasks)
    for tid in sorted(missing):
        out.append(Violation("unscheduled task", tid))
    for tid in sorted(extra):
        out.append(Violation("unknown task", tid))

    envs = {e.env: e for e in result.envs}
    on_env: dict[int, list] = defaultdict(list)
    for tid in sorted(set(tasks) & set(records)):
        rec = records[tid]
        task = tasks[tid]
        p = fams[task.family].duration
        if rec.end - rec.start != p:
            out.append(Violation("wrong duration", tid, f"{rec.start}..{rec.end} for p={p}"))
        for pred in task.preds:
            if pred in records and rec.start < records[pred].end:
                out.append(Violation("dependency", tid, f"starts {rec.start} before pred {pred} ends {records[pred].end}"))
        env = envs.get(rec.env)
        if env is None:
            out.append(Violation("unknown environment", tid, str(rec.env)))
            continue
        on_env[rec.env].append(rec)
        if env.family != task.family or rec.family != task.family:
            out.append(Violation("family mismatch", tid, f"env {env.env} is family {env.family}"))
        if rec.machine != env.machine:
            out.append(Violation("machine mismatch", tid, f"{rec.machine} != {env.machine}"))

    for env_id, recs in sorted(on_env.items()):
        env = envs[env_id]
        recs.sort(key=lambda r: (r.start, r.end))
        for r in recs:
            if r.start < env.init_done:
                out.append(Violation("before init", r.task, f"starts {r.start} < init_done {env.init_done}"))
            if env.removed is not None and r.end > env.removed:
                out.append(Violation("after removal", r.task, f"ends {r.end} > removed {env.removed}"))
        for a, b in zip(recs, recs[1:]):
            if b.start < a.end:
                out.append(Violation("overlap", env_id, f"tasks {a.task} and {b.task}"))

    for env in result.envs:
        fam = fams.get(env.family)
        if fam is None:
            out.append(Violation("unknown family", f"env {env.env}", str(env.family)))
        elif env.init_done != env.created + fam.setup:
            out.append(Violation("bad init window", f"env {env.env}"))
        if not 0 <= env.machine < cluster.machines:
            out.append(Violation("bad machine", f"env {env.env}", str(env.machine)))
        if env.removed is not None and env.removed < env.created:
            out.append(Violation("removed before created", f"env {env.env}"))

    by_machine: dict[int, list] = defaultdict(list)
    for env in result.envs:
        if env.family in fams:
            by_machine[env.machine].append(env)
    for machine, menvs in sorted(by_machine.items()):
        boundaries = sorted({e.created for e in menvs} | {e.removed for e in menvs if e.removed is not None})
        for b in boundaries:
            used = sum(
                fams[e.family].size
                for e in menvs
                if e.created <= b and (e.removed is None or e.removed > b)
            )
            if used > cluster.capacity:
                out.append(Violation("capacity", f"machine {machine} at t={b}", f"{used} > {cluster.capacity}"))
    return out


def normalize_relative(
    groups: Mapping[Hashable, Mapping[Hashable, float]],
    expected: Optional[Iterable[Hashable]] = None,
) -> dict[Hashable, dict[Hashable, float]]:
    """Divide each group's values by the group minimum.

    ``groups`` maps a group key to ``{varied value: mean latency}``. When
    ``expected`` is given, every group must contain exactly those values.
    Exact ``Fraction`` inputs stay exact.
    """
    expected = set(expected) if expected is not None else None
    out = {}
    for key, values in groups.items():
        if expected is not None:
            missing = expected - set(values)
            if missing:
                raise IncompleteGroup(key, missing)
        if not values:
            raise IncompleteGroup(key, expected or {"<any>"})
        low = min(values.values())
        out[key] = {k: (v / low if low else Fraction(1)) for k, v in values.items()}
    return out


def box_stats(values: Sequence[float]) -> BoxStats:
    """Box-plot statistics; quartiles interpolate linearly between closest ranks."""
    data = np.asarray(values, dtype=float)
    if data.size == 0:
        raise ValueError("box_stats needs at least one value")
    q1, median, q3 = np.percentile(data, [25, 50, 75], method="linear")
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = data[(data >= lo_fence) & (data <= hi_fence)]
    outliers = tuple(sorted(float(x) for x in data[(data < lo_fence) | (data > hi_fence)]))
    return BoxStats(float(q1), float(median), float(q3), float(inside.min()), float(inside.max()), outliers)


def brute_force_optimal(instance: Instance, cluster: ClusterConfig) -> Fraction:
    """Exhaustive minimum mean latency for tiny instances (see ``oracle``)."""
    from .oracle import brute_force_optimal as _bf

    return _bf(instance, cluster)
