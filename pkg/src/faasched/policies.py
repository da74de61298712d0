"""Ordering and removal policies, and the OW round-robin baseline."""

from __future__ import annotations

import heapq
import math
import time
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import Deadlock
from .model import ClusterConfig, FamilySpec, Instance, Ordering, Removal
from .state import ClusterState, Environment, QueuedTask, SimResult


@dataclass(frozen=True)
class RemovalSelection:
    machine: int
    victims: tuple[int, ...]  # env ids, in eviction order


@dataclass(frozen=True)
class OwFamilyRoute:
    family: int
    home: int
    step: int


def remaining_work_table(instance: Instance) -> dict[int, int]:
    """Task id -> total duration of the task and everything after it in its job.

    On chains this is the suffix sum of durations; on out-trees it is the
    duration of the subtree rooted at the task.
    """
    cached = instance.__dict__.get("_remaining_work")
    if cached is not None:
        return cached
    succ = instance.successors
    work: dict[int, int] = {}
    for job in instance.jobs:
        for task in sorted(job.tasks, key=lambda t: t.index, reverse=True):
            p = instance.family_by_id[task.family].duration
            work[task.id] = p + sum(work[s] for s in succ[task.id])
    instance.__dict__["_remaining_work"] = work
    return work


def remaining_work(task: int, instance: Instance) -> int:
    return remaining_work_table(instance)[task]


def order_queue(
    ordering: Ordering,
    queue: Sequence[QueuedTask],
    state: ClusterState,
    instance: Instance,
) -> list[QueuedTask]:
    """Return the queue in the order the placement loop should try it.

    All orderings break ties by enqueue sequence number. EF looks at which
    families have an idle environment at ``state.now``, once per call.
    """
    items = sorted(queue, key=lambda q: q.seq)
    if ordering == Ordering.FIFO:
        return items
    if ordering == Ordering.EF:
        idle = state.idle_families(state.now)
        fam = instance.task_by_id
        first = [q for q in items if fam[q.task].family in idle]
        rest = [q for q in items if fam[q.task].family not in idle]
        return first + rest
    if ordering == Ordering.SJF:
        fams = instance.family_by_id
        tasks = instance.task_by_id
        return sorted(items, key=lambda q: fams[tasks[q.task].family].duration)
    if ordering == Ordering.SW:
        work = remaining_work_table(instance)
        return sorted(items, key=lambda q: work[q.task])
    if ordering == Ordering.RT:
        return sorted(items, key=lambda q: q.release)
    raise ValueError(f"unknown ordering {ordering!r}")


def _lru_key(env: Environment):
    return (env.last_used, env.env_id)


def _prefix_to_fit(candidates: list[Environment], free: int, need: int) -> list[Environment]:
    victims = []
    for env in candidates:
        if free >= need:
            break
        victims.append(env)
        free += env.size
    return victims


def select_removals(
    removal: Removal,
    state: ClusterState,
    family: FamilySpec | int,
    q_needed: int,
) -> Optional[RemovalSelection]:
    """Pick a machine and the idle environments to evict there, or None."""
    t = state.now
    feasible = []
    for m in range(state.machines):
        cands = state.removable(m, t)
        if state.free[m] + sum(e.size for e in cands) >= q_needed:
            feasible.append((m, cands))
            if removal == Removal.LRU:
                break
    if not feasible:
        return None

    if removal == Removal.LRU:
        m, cands = feasible[0]
        victims = _prefix_to_fit(sorted(cands, key=_lru_key), state.free[m], q_needed)
        return RemovalSelection(m, tuple(e.env_id for e in victims))

    if removal == Removal.MIN_TIME:
        best = None
        for m, cands in feasible:
            cands = sorted(cands, key=lambda e: (e.family.setup,) + _lru_key(e))
            victims = _prefix_to_fit(cands, state.free[m], q_needed)
            cost = sum(e.family.setup for e in victims)
            if best is None or cost < best[0]:
                best = (cost, m, victims)
        _, m, victims = best
        return RemovalSelection(m, tuple(e.env_id for e in victims))

    if removal == Removal.MIN_FAMILY:
        counts = state.family_counts()
        best = None
        for m, cands in feasible:
            cands = sorted(cands, key=lambda e: (-counts[e.family.id],) + _lru_key(e))
            victims = _prefix_to_fit(cands, state.free[m], q_needed)
            lost: dict[int, int] = {}
            for e in victims:
                lost[e.family.id] = lost.get(e.family.id, 0) + 1
            emptied = sum(1 for f, k in lost.items() if counts[f] == k)
            if best is None or emptied < best[0]:
                best = (emptied, m, victims)
        _, m, victims = best
        return RemovalSelection(m, tuple(e.env_id for e in victims))

    raise ValueError(f"unknown removal policy {removal!r}")


def coprime_step(m: int, rng: np.random.Generator) -> int:
    """Uniform draw from the integers in [1, m) co-prime with ``m``."""
    if m <= 2:
        return 1
    candidates = [k for k in range(1, m) if math.gcd(k, m) == 1]
    return candidates[int(rng.integers(len(candidates)))]


def draw_routes(instance: Instance, machines: int, rng: np.random.Generator) -> dict[int, OwFamilyRoute]:
    routes = {}
    for f in instance.families:
        home = int(rng.integers(machines))
        routes[f.id] = OwFamilyRoute(f.id, home, coprime_step(machines, rng))
    return routes


def _ow_claim(state: ClusterState, machine: int, family: FamilySpec, t: int) -> Optional[Environment]:
    """Claim an environment on ``machine`` for ``family``: reuse, create, or evict LRU-first."""
    idle = [e for e in state.resident[machine] if e.family.id == family.id and e.is_idle(t)]
    if idle:
        return idle[0]
    if state.free[machine] >= family.size:
        return state.create_environment(family, machine, t)
    cands = sorted(state.removable(machine, t), key=_lru_key)
    if state.free[machine] + sum(e.size for e in cands) < family.size:
        return None
    for env in _prefix_to_fit(cands, state.free[machine], family.size):
        state.remove_environment(env, t)
    return state.create_environment(family, machine, t)


def ow_simulate(instance: Instance, cluster: ClusterConfig, seed: int = 0) -> SimResult:
    """Simulate the OpenWhisk-like baseline.

    Each family probes machines ``home, home+step, ...`` (mod m) and takes the
    first one with an idle environment of its type or enough space, counting
    idle environments of other types as free. Tasks that fit nowhere wait in
    the FIFO queue of a random machine; those queues are retried at every
    completion, head first, against their own machine only.
    """
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    state = ClusterState(instance, cluster)
    m = cluster.machines
    routes = draw_routes(instance, m, rng)
    tasks = instance.task_by_id
    fams = instance.family_by_id
    succ = instance.successors
    local: list[deque] = [deque() for _ in range(m)]
    events: list[tuple[int, int, int, int]] = []

    def start(task_id: int, env: Environment, release: int, t: int) -> None:
        a = state.assign_task(env, task_id, release, t)
        task = tasks[task_id]
        heapq.heappush(events, (a.end, task.job, task.index, task_id))

    ready = [(t.id, 0) for t in instance.iter_tasks() if not t.preds]
    released = {tid for tid, _ in ready}
    t = 0
    while True:
        state.now = t
        for task_id, release in ready:
            family = fams[tasks[task_id].family]
            route = routes[family.id]
            for i in range(m):
                env = _ow_claim(state, (route.home + i * route.step) % m, family, t)
                if env is not None:
                    start(task_id, env, release, t)
                    break
            else:
                local[int(rng.integers(m))].append((task_id, release))
        for machine in range(m):
            q = local[machine]
            while q:
                task_id, release = q[0]
                env = _ow_claim(state, machine, fams[tasks[task_id].family], t)
                if env is None:
                    break
                q.popleft()
                start(task_id, env, release, t)

        if not events:
            if any(local):
                raise Deadlock(f"OW: {sum(map(len, local))} tasks stuck at t={t}")
            break
        t = events[0][0]
        ready = []
        while events and events[0][0] == t:
            done = heapq.heappop(events)[3]
            for s in succ[done]:
                if s in released:
                    continue
                ends = [state.records[p].end for p in tasks[s].preds if p in state.records]
                if len(ends) == len(tasks[s].preds) and max(ends) <= t:
                    released.add(s)
                    ready.append((s, max(ends)))

    return state.result("OW", seed=seed, runtime=time.perf_counter() - started)
