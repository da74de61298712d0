"""Exhaustive optimum of the mean job latency for tiny instances.

Decisions are taken at time 0 and at every task completion. At such an
instant any task whose predecessors are all assigned may be appended to any
live environment of its family, or to a new environment created on any
machine after evicting any subset of that machine's idle environments that
makes room. Alternatively the search jumps to the next completion. Every
schedule the heuristics in this package build is a path in this tree.
"""

from __future__ import annotations

import itertools
import math
import sys
from fractions import Fraction

from .errors import InfeasibleInstance, TooLarge
from .model import ClusterConfig, Instance
from .state import ClusterState, SimResult

MAX_TASKS = 6
MAX_MACHINES = 2

# live environment: (machine, family id, projected completion)
Env = tuple[int, int, int]


class _Search:
    def __init__(self, instance: Instance, cluster: ClusterConfig, prune: bool = True):
        self.prune = prune
        self.instance = instance
        self.cluster = cluster
        self.tasks = list(instance.iter_tasks())
        pos = {t.id: i for i, t in enumerate(self.tasks)}
        self.preds = [tuple(pos[p] for p in t.preds) for t in self.tasks]
        fams = instance.family_by_id
        self.fam = [fams[t.family] for t in self.tasks]
        self.size = {f.id: f.size for f in instance.families}
        self.job_tasks = [[pos[t.id] for t in job.tasks] for job in instance.jobs]
        self.memo: dict = {}

    def terminal(self, ends) -> int:
        return sum(max(ends[i] for i in tasks) for tasks in self.job_tasks)

    def actions(self, t: int, ends: tuple, envs: tuple[Env, ...]):
        """Yield (action, new_ends, new_envs)."""
        Q = self.cluster.capacity
        for i, end in enumerate(ends):
            if end is not None or any(ends[p] is None for p in self.preds[i]):
                continue
            release = max((ends[p] for p in self.preds[i]), default=0)
            fam = self.fam[i]
            seen = set()
            for j, (mach, fid, ready) in enumerate(envs):
                if fid != fam.id or envs[j] in seen:
                    continue
                seen.add(envs[j])
                start = max(ready, release)
                new_envs = envs[:j] + ((mach, fid, start + fam.duration),) + envs[j + 1:]
                yield ("reuse", i, envs[j], (), start), _set(ends, i, start + fam.duration), tuple(sorted(new_envs))
            for mach in range(self.cluster.machines):
                here = [e for e in envs if e[0] == mach]
                free = Q - sum(self.size[e[1]] for e in here)
                idle = [e for e in here if e[2] <= t]
                tried = set()
                for r in range(len(idle) + 1):
                    for victims in itertools.combinations(idle, r):
                        if free + sum(self.size[e[1]] for e in victims) < fam.size:
                            continue
                        if victims in tried:
                            continue
                        tried.add(victims)
                        rest = list(envs)
                        for v in victims:
                            rest.remove(v)
                        start = max(t + fam.setup, release)
                        rest.append((mach, fam.id, start + fam.duration))
                        yield ("create", i, mach, victims, start), _set(ends, i, start + fam.duration), tuple(sorted(rest))

    def lower_bound(self, t: int, ends: tuple, envs: tuple[Env, ...]) -> int:
        """Admissible bound on the final latency sum from this state."""
        soonest: dict[int, int] = {}
        for _, fid, ready in envs:
            if fid not in soonest or ready < soonest[fid]:
                soonest[fid] = ready
        est = list(ends)
        for i, end in enumerate(ends):
            if end is None:
                fam = self.fam[i]
                release = max((est[p] for p in self.preds[i]), default=0)
                avail = min(t + fam.setup, soonest.get(fam.id, t + fam.setup))
                est[i] = max(release, avail) + fam.duration
        return self.terminal(est)

    def best(self, t: int, ends: tuple, envs: tuple[Env, ...], bound: float = math.inf) -> tuple[float, bool]:
        """Return (value, exact). Values at or above ``bound`` may be lower bounds only."""
        key = (t, ends, envs)
        hit = self.memo.get(key)
        if hit is not None:
            value, exact, _ = hit
            if exact or value >= bound:
                return value, exact
        if all(e is not None for e in ends):
            value = self.terminal(ends)
            self.memo[key] = (value, True, None)
            return value, True
        lb = self.lower_bound(t, ends, envs) if self.prune else 0
        if lb >= bound:
            self.memo[key] = (lb, False, None)
            return lb, False

        value, choice = math.inf, None
        children = [(action, t, new_ends, new_envs) for action, new_ends, new_envs in self.actions(t, ends, envs)]
        later = [e for e in ends if e is not None and e > t]
        if later:
            nt = min(later)
            children.append(("advance", nt, ends, envs))
        for action, ct, new_ends, new_envs in children:
            v, _ = self.best(ct, new_ends, new_envs, min(bound, value))
            if v < value:
                value, choice = v, (action, ct, new_ends, new_envs)
        exact = value < bound
        if not exact:
            value = max(value, lb)
        self.memo[key] = (value, exact, choice if exact else None)
        return value, exact

    def replay(self) -> SimResult:
        """Rebuild the optimal schedule as a SimResult."""
        state = ClusterState(self.instance, self.cluster)
        key = (0, (None,) * len(self.tasks), ())
        while True:
            value, exact, choice = self.memo[key]
            assert exact
            if choice is None:
                break
            action, t, new_ends, new_envs = choice
            state.now = t
            if action == "advance":
                key = (t, new_ends, new_envs)
                continue
            kind, i, where, victims, start = action
            task = self.tasks[i]
            if kind == "reuse":
                mach, fid, ready = where
                env = next(
                    e for e in state.resident[mach] if e.family.id == fid and e.projected_completion == ready
                )
            else:
                for mach, fid, ready in victims:
                    victim = next(
                        e for e in state.resident[where]
                        if e.family.id == fid and e.projected_completion == ready
                    )
                    state.remove_environment(victim, t)
                env = state.create_environment(self.fam[i], where, t)
            release = max((new_ends[p] for p in self.preds[i]), default=0)
            a = state.assign_task(env, task.id, release, t)
            assert a.start == start
            key = (t, new_ends, new_envs)
        return state.result("optimal")


def _set(tup: tuple, i: int, value) -> tuple:
    return tup[:i] + (value,) + tup[i + 1:]


def _search(instance: Instance, cluster: ClusterConfig, prune: bool = True) -> _Search:
    if instance.n_tasks > MAX_TASKS or cluster.machines > MAX_MACHINES:
        raise TooLarge(
            f"oracle limited to n<={MAX_TASKS}, m<={MAX_MACHINES}; got n={instance.n_tasks}, m={cluster.machines}"
        )
    if max(f.size for f in instance.families) > cluster.capacity:
        raise InfeasibleInstance("largest family does not fit")
    search = _Search(instance, cluster, prune)
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10_000))
    try:
        search.best(0, (None,) * len(search.tasks), ())
    finally:
        sys.setrecursionlimit(limit)
    return search


def brute_force_optimal(instance: Instance, cluster: ClusterConfig, prune: bool = True) -> Fraction:
    """Minimal achievable mean job latency (n <= 6 tasks, m <= 2 machines).

    ``prune=False`` disables the branch-and-bound cut and visits the whole
    decision tree; it is slow beyond four or five tasks.
    """
    search = _search(instance, cluster, prune)
    total, exact, _ = search.memo[(0, (None,) * len(search.tasks), ())]
    assert exact
    return Fraction(int(total), instance.n_jobs)


def optimal_schedule(instance: Instance, cluster: ClusterConfig) -> tuple[Fraction, SimResult]:
    search = _search(instance, cluster)
    result = search.replay()
    total = sum(result.job_latencies.values())
    return Fraction(total, instance.n_jobs), result
