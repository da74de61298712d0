"""Event-driven simulation of the framework list-scheduling algorithm.

Events are task completions only: every assignment fixes the task's start
and end on its environment's append-only timeline, so the engine just jumps
from one completion instant to the next and runs one scheduling step there.
"""

from __future__ import annotations

import heapq
import itertools
import time
from typing import Optional

from .errors import Deadlock, InfeasibleInstance, ValidationError
from .model import ClusterConfig, Dependency, Instance, PolicyConfig, TaskSpec, validate_instance
from .policies import order_queue, ow_simulate, select_removals
from .state import ClusterState, Environment, QueuedTask, SimResult


def find_unused_environment(state: ClusterState, task: TaskSpec) -> Optional[Environment]:
    """First idle environment of the task's family by (machine, env_id)."""
    t = state.now
    best = None
    for env in state.by_family[task.family]:
        if env.is_idle(t) and (best is None or env.machine < best.machine):
            best = env
    return best


def find_environment_to_wait(state: ClusterState, task: TaskSpec, t: int) -> Optional[Environment]:
    """Busy environment of the task's family that frees up no later than a fresh one would."""
    setup = state.instance.family_by_id[task.family].setup
    best = None
    for env in state.by_family[task.family]:
        key = (env.projected_completion, env.machine, env.env_id)
        if best is None or key < best[0]:
            best = (key, env)
    if best is not None and best[0][0] <= t + setup:
        return best[1]
    return None


def place_new_environment(state: ClusterState, task: TaskSpec, t: int) -> Optional[Environment]:
    family = state.instance.family_by_id[task.family]
    for m in range(state.machines):
        if state.free[m] >= family.size:
            return state.create_environment(family, m, t)
    return None


def remove_and_place_environment(state: ClusterState, task: TaskSpec, t: int, removal) -> Optional[Environment]:
    family = state.instance.family_by_id[task.family]
    selection = select_removals(removal, state, family, family.size)
    if selection is None:
        return None
    for env_id in selection.victims:
        state.remove_environment(state.envs[env_id], t)
    return state.create_environment(family, selection.machine, t)


def assign_task(state: ClusterState, env: Environment, task: TaskSpec, release: int):
    return state.assign_task(env, task.id, release, state.now)


class Scheduler:
    """One simulation run of a tuple policy."""

    def __init__(self, instance: Instance, cluster: ClusterConfig, policy: PolicyConfig):
        if policy.is_ow:
            raise ValueError("OW is simulated by policies.ow_simulate")
        self.instance = instance
        self.policy = policy
        self.state = ClusterState(instance, cluster)
        self.queue: dict[int, QueuedTask] = {}
        self.events: list[tuple[int, int, int, int]] = []
        self._seq = itertools.count()
        self._released: set[int] = set()
        # smallest size that failed both placement fallbacks at the current
        # instant; free + removable space only shrinks within one instant
        self._blocked_size: Optional[int] = None

    # -- queue management -------------------------------------------------

    def enqueue(self, task_id: int, release: int) -> QueuedTask:
        q = QueuedTask(task_id, release, next(self._seq))
        self.queue[q.seq] = q
        self._released.add(task_id)
        return q

    def queue_dependent_tasks(self, task_id: int, completed_only: bool) -> list[QueuedTask]:
        """Enqueue successors of ``task_id`` whose predecessors are all satisfied.

        Satisfied means completed by ``state.now`` when ``completed_only``,
        otherwise merely assigned. The release time is the latest exact
        predecessor end.
        """
        tasks = self.instance.task_by_id
        records = self.state.records
        added = []
        for s in self.instance.successors[task_id]:
            if s in self._released:
                continue
            preds = tasks[s].preds
            if not all(p in records for p in preds):
                continue
            release = max(records[p].end for p in preds)
            if completed_only and release > self.state.now:
                continue
            added.append(self.enqueue(s, release))
        return added

    # -- placement --------------------------------------------------------

    def find_environment(self, task: TaskSpec, t: int) -> Optional[Environment]:
        state = self.state
        env = find_unused_environment(state, task)
        if env is None and self.policy.wait:
            env = find_environment_to_wait(state, task, t)
        if env is not None:
            return env
        size = self.instance.family_by_id[task.family].size
        if self._blocked_size is not None and size >= self._blocked_size:
            return None
        env = place_new_environment(state, task, t)
        if env is None:
            env = remove_and_place_environment(state, task, t, self.policy.removal)
        if env is None:
            self._blocked_size = size
        return env

    def _assign(self, q: QueuedTask, env: Environment) -> None:
        task = self.instance.task_by_id[q.task]
        a = assign_task(self.state, env, task, q.release)
        del self.queue[q.seq]
        heapq.heappush(self.events, (a.end, task.job, task.index, task.id))

    def placement_pass(self, t: int, restart_on_enqueue: bool = False) -> tuple[bool, bool]:
        """Try every queued task once, in policy order.

        Returns (assigned_any, interrupted); with ``restart_on_enqueue`` the
        pass stops right after an assignment that enqueued successors.
        """
        dep = self.policy.dependency
        ordered = order_queue(self.policy.ordering, list(self.queue.values()), self.state, self.instance)
        tasks = self.instance.task_by_id
        assigned = False
        for q in ordered:
            env = self.find_environment(tasks[q.task], t)
            if env is None:
                continue
            self._assign(q, env)
            assigned = True
            if dep != Dependency.DEF:
                added = self.queue_dependent_tasks(q.task, completed_only=False)
                if added and restart_on_enqueue:
                    return True, True
        return assigned, False

    def scheduling_step(self, t: int, completed: list[int]) -> None:
        self.state.now = t
        self._blocked_size = None
        dep = self.policy.dependency
        if dep == Dependency.DEF:
            for task_id in completed:
                self.queue_dependent_tasks(task_id, completed_only=True)
            self.placement_pass(t)
        elif dep == Dependency.START:
            while self.queue and self.placement_pass(t)[0]:
                pass
        else:
            while self.queue and self.placement_pass(t, restart_on_enqueue=True)[1]:
                pass

    # -- main loop --------------------------------------------------------

    def run(self) -> ClusterState:
        for task in self.instance.iter_tasks():
            if not task.preds:
                self.enqueue(task.id, 0)
        t = 0
        self.scheduling_step(t, [])
        while self.events:
            t = self.events[0][0]
            completed = []
            while self.events and self.events[0][0] == t:
                completed.append(heapq.heappop(self.events)[3])
            self.scheduling_step(t, completed)
        if self.queue or len(self.state.records) != self.instance.n_tasks:
            raise Deadlock(
                f"{len(self.queue)} queued, {len(self.state.records)}/{self.instance.n_tasks} assigned at t={t}"
            )
        return self.state


def simulate(
    instance: Instance,
    cluster: ClusterConfig,
    policy: PolicyConfig,
    seed: int = 0,
    check: bool = False,
) -> SimResult:
    """Run one policy on one instance and cluster.

    The tuple policies are deterministic and ignore ``seed``; OW uses it for
    its random routing choices.
    """
    if check:
        problems = validate_instance(instance)
        if problems:
            raise ValidationError(problems)
    if instance.families and max(f.size for f in instance.families) > cluster.capacity:
        raise InfeasibleInstance(f"largest family does not fit Q={cluster.capacity}")
    if policy.is_ow:
        return ow_simulate(instance, cluster, seed)
    started = time.perf_counter()
    state = Scheduler(instance, cluster, policy).run()
    return state.result(str(policy), seed=seed, runtime=time.perf_counter() - started)
