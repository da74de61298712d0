"""Runtime cluster state: machines, environments and their task timelines."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .errors import FamilyMismatch, InfeasibleInstance
from .model import ClusterConfig, FamilySpec, Instance


@dataclass
class Assignment:
    task: int
    release: int
    start: int
    end: int


@dataclass
class Environment:
    env_id: int
    family: FamilySpec
    machine: int
    created_at: int
    removed_at: Optional[int] = None
    assigned: list[Assignment] = field(default_factory=list)

    @property
    def init_done(self) -> int:
        return self.created_at + self.family.setup

    @property
    def size(self) -> int:
        return self.family.size

    @property
    def projected_completion(self) -> int:
        """End of the last assigned task, or ``init_done`` for an empty env."""
        if self.assigned:
            return self.assigned[-1].end
        return self.init_done

    def is_idle(self, t: int) -> bool:
        # a task ending exactly at t counts as finished
        return self.projected_completion <= t

    @property
    def last_used(self) -> int:
        """LRU timestamp."""
        return self.assigned[-1].end if self.assigned else self.created_at

    def assign(self, task_id: int, family_id: int, release: int) -> Assignment:
        """Append a task to the timeline; earlier assignments never move."""
        if family_id != self.family.id:
            raise FamilyMismatch(
                f"task {task_id} of family {family_id} on env {self.env_id} of family {self.family.id}"
            )
        start = max(self.projected_completion, release)
        a = Assignment(task_id, release, start, start + self.family.duration)
        self.assigned.append(a)
        return a


def projected_completion(env: Environment) -> int:
    return env.projected_completion


@dataclass(frozen=True)
class QueuedTask:
    task: int
    release: int
    seq: int


@dataclass(frozen=True)
class TaskRecord:
    task: int
    job: int
    family: int
    machine: int
    env: int
    release: int
    start: int
    end: int


@dataclass(frozen=True)
class EnvRecord:
    env: int
    family: int
    machine: int
    created: int
    init_done: int
    removed: Optional[int]


@dataclass
class SimResult:
    tasks: dict[int, TaskRecord]
    envs: list[EnvRecord]
    job_latencies: dict[int, int]
    policy: str
    machines: int
    capacity: int
    instance_id: str = "instance"
    seed: int = 0
    runtime: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        # wall-clock runtime is left out so that output is reproducible
        return {
            "instance": self.instance_id,
            "policy": self.policy,
            "seed": self.seed,
            "machines": self.machines,
            "capacity": self.capacity,
            "tasks": [vars(self.tasks[k]) for k in sorted(self.tasks)],
            "envs": [vars(e) for e in self.envs],
            "job_latencies": {str(k): v for k, v in sorted(self.job_latencies.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "SimResult":
        tasks = {r["task"]: TaskRecord(**r) for r in d["tasks"]}
        return cls(
            tasks=tasks,
            envs=[EnvRecord(**e) for e in d["envs"]],
            job_latencies={int(k): v for k, v in d["job_latencies"].items()},
            policy=d["policy"],
            machines=d["machines"],
            capacity=d["capacity"],
            instance_id=d.get("instance", "instance"),
            seed=d.get("seed", 0),
        )

    @classmethod
    def from_json(cls, text: str) -> "SimResult":
        return cls.from_dict(json.loads(text))


class ClusterState:
    """Machines with their resident environments plus per-family indexes."""

    def __init__(self, instance: Instance, cluster: ClusterConfig):
        big = [f for f in instance.families if f.size > cluster.capacity]
        if big:
            raise InfeasibleInstance(
                f"families {[f.id for f in big]} need more than Q={cluster.capacity}"
            )
        self.instance = instance
        self.cluster = cluster
        self.envs: list[Environment] = []
        self.resident: list[list[Environment]] = [[] for _ in range(cluster.machines)]
        self.free: list[int] = [cluster.capacity] * cluster.machines
        self.by_family: dict[int, list[Environment]] = {f.id: [] for f in instance.families}
        self.records: dict[int, TaskRecord] = {}
        self.assigned_at: dict[int, int] = {}
        self.now = 0

    @property
    def machines(self) -> int:
        return self.cluster.machines

    def create_environment(self, family: FamilySpec, machine: int, t: int) -> Environment:
        assert self.free[machine] >= family.size, "capacity overflow"
        env = Environment(len(self.envs), family, machine, t)
        self.envs.append(env)
        self.resident[machine].append(env)
        self.free[machine] -= family.size
        self.by_family[family.id].append(env)
        return env

    def remove_environment(self, env: Environment, t: int) -> None:
        assert env.is_idle(t), "evicting a busy environment"
        env.removed_at = t
        self.resident[env.machine].remove(env)
        self.free[env.machine] += env.size
        self.by_family[env.family.id].remove(env)

    def removable(self, machine: int, t: int) -> list[Environment]:
        return [e for e in self.resident[machine] if e.is_idle(t)]

    def idle_families(self, t: int) -> set[int]:
        return {e.family.id for envs in self.resident for e in envs if e.is_idle(t)}

    def family_counts(self) -> dict[int, int]:
        return {f: len(v) for f, v in self.by_family.items()}

    def assign_task(self, env: Environment, task_id: int, release: int, t: int) -> Assignment:
        task = self.instance.task_by_id[task_id]
        a = env.assign(task_id, task.family, release)
        self.records[task_id] = TaskRecord(
            task_id, task.job, task.family, env.machine, env.env_id, release, a.start, a.end
        )
        self.assigned_at[task_id] = t
        return a

    def result(self, policy: str, seed: int = 0, runtime: float = 0.0) -> SimResult:
        latencies: dict[int, int] = {}
        for job in self.instance.jobs:
            latencies[job.id] = max(self.records[t.id].end for t in job.tasks)
        envs = [
            EnvRecord(e.env_id, e.family.id, e.machine, e.created_at, e.init_done, e.removed_at)
            for e in self.envs
        ]
        return SimResult(
            tasks=dict(self.records),
            envs=envs,
            job_latencies=latencies,
            policy=policy,
            machines=self.cluster.machines,
            capacity=self.cluster.capacity,
            instance_id=self.instance.instance_id,
            seed=seed,
            runtime=runtime,
        )
