"""Workload, cluster and policy data model.

All times and resource amounts are plain integers. Family ids are 1-based,
task ids are unique across an instance.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterator, Optional


@dataclass(frozen=True)
class FamilySpec:
    id: int
    duration: int
    size: int
    setup: int


@dataclass(frozen=True)
class TaskSpec:
    id: int
    job: int
    index: int  # 1-based position within the job
    family: int
    preds: tuple[int, ...] = ()


@dataclass(frozen=True)
class Job:
    id: int
    tasks: tuple[TaskSpec, ...]


@dataclass(frozen=True)
class Instance:
    families: tuple[FamilySpec, ...]
    jobs: tuple[Job, ...]
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def n_jobs(self) -> int:
        return len(self.jobs)

    @property
    def n_tasks(self) -> int:
        return sum(len(j.tasks) for j in self.jobs)

    @property
    def n_families(self) -> int:
        return len(self.families)

    def iter_tasks(self) -> Iterator[TaskSpec]:
        for job in self.jobs:
            yield from job.tasks

    @cached_property
    def family_by_id(self) -> dict[int, FamilySpec]:
        return {f.id: f for f in self.families}

    @cached_property
    def task_by_id(self) -> dict[int, TaskSpec]:
        return {t.id: t for t in self.iter_tasks()}

    @cached_property
    def successors(self) -> dict[int, tuple[int, ...]]:
        """Task id -> successor ids ordered by task index."""
        succ: dict[int, list[TaskSpec]] = {t.id: [] for t in self.iter_tasks()}
        for task in self.iter_tasks():
            for p in task.preds:
                if p in succ:
                    succ[p].append(task)
        return {
            k: tuple(t.id for t in sorted(v, key=lambda t: t.index))
            for k, v in succ.items()
        }

    def family_of(self, task_id: int) -> FamilySpec:
        return self.family_by_id[self.task_by_id[task_id].family]

    @property
    def instance_id(self) -> str:
        return str(self.meta.get("id", "instance"))

    def is_chain(self) -> bool:
        for job in self.jobs:
            for k, task in enumerate(job.tasks):
                expected = (job.tasks[k - 1].id,) if k else ()
                if tuple(task.preds) != expected:
                    return False
        return True


@dataclass(frozen=True)
class ClusterConfig:
    machines: int
    capacity: int

    def __post_init__(self):
        if self.machines < 1 or self.capacity < 1:
            raise ValueError(f"invalid cluster {self.machines}x{self.capacity}")


class Ordering(str, enum.Enum):
    FIFO = "FIFO"
    EF = "EF"
    SJF = "SJF"
    SW = "SW"
    RT = "RT"


class Removal(str, enum.Enum):
    LRU = "LRU"
    MIN_TIME = "MinTime"
    MIN_FAMILY = "MinFamily"


class Dependency(str, enum.Enum):
    DEF = "def"
    START = "start"
    STBR = "stbr"


@dataclass(frozen=True)
class PolicyConfig:
    """Either the OW baseline (all fields None) or a full policy tuple."""

    ordering: Optional[Ordering] = None
    removal: Optional[Removal] = None
    wait: Optional[bool] = None
    dependency: Optional[Dependency] = None

    def __post_init__(self):
        fields = (self.ordering, self.removal, self.wait, self.dependency)
        if any(f is None for f in fields) and any(f is not None for f in fields):
            raise ValueError("policy tuple must be complete, or empty for OW")
        if self.ordering is not None:
            object.__setattr__(self, "ordering", Ordering(self.ordering))
            object.__setattr__(self, "removal", Removal(self.removal))
            object.__setattr__(self, "dependency", Dependency(self.dependency))
            object.__setattr__(self, "wait", bool(self.wait))

    @classmethod
    def ow(cls) -> "PolicyConfig":
        return cls()

    @property
    def is_ow(self) -> bool:
        return self.ordering is None

    @classmethod
    def parse(cls, text: str) -> "PolicyConfig":
        """Parse ``"OW"`` or ``"<ordering>,<removal>,<wait|nowait>,<def|start|stbr>"``."""
        text = text.strip()
        if text.upper() == "OW":
            return cls.ow()
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"cannot parse policy {text!r}")
        ordering, removal, wait, dep = parts
        if wait not in ("wait", "nowait"):
            raise ValueError(f"expected wait|nowait, got {wait!r}")
        try:
            return cls(Ordering(ordering), Removal(removal), wait == "wait", Dependency(dep))
        except ValueError as exc:
            raise ValueError(f"cannot parse policy {text!r}: {exc}") from None

    def __str__(self) -> str:
        if self.is_ow:
            return "OW"
        wait = "wait" if self.wait else "nowait"
        return f"{self.ordering.value},{self.removal.value},{wait},{self.dependency.value}"

    @staticmethod
    def all_tuples() -> list["PolicyConfig"]:
        """The 90 tuple variants, in a fixed order."""
        return [
            PolicyConfig(o, r, w, d)
            for o, r, w, d in itertools.product(Ordering, Removal, (False, True), Dependency)
        ]


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: Any
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.kind}[{self.subject}]: {self.detail}" if self.detail else f"{self.kind}[{self.subject}]"


def validate_instance(instance: Instance) -> list[Violation]:
    """Return every structural problem found in ``instance`` (empty if valid)."""
    out: list[Violation] = []
    fam_ids = [f.id for f in instance.families]
    if len(set(fam_ids)) != len(fam_ids):
        out.append(Violation("duplicate family", sorted(fam_ids)))
    elif sorted(fam_ids) != list(range(1, len(fam_ids) + 1)):
        out.append(Violation("non-dense family ids", sorted(fam_ids)))
    for f in instance.families:
        if f.duration < 1:
            out.append(Violation("bad duration", f.id, str(f.duration)))
        if f.size < 1:
            out.append(Violation("bad size", f.id, str(f.size)))
        if f.setup < 0:
            out.append(Violation("bad setup", f.id, str(f.setup)))
    known = set(fam_ids)

    seen: set[int] = set()
    job_ids: set[int] = set()
    for job in instance.jobs:
        if job.id in job_ids:
            out.append(Violation("duplicate job", job.id))
        job_ids.add(job.id)
        if not job.tasks:
            out.append(Violation("empty job", job.id))
        index_of = {t.id: t.index for t in job.tasks}
        for pos, task in enumerate(job.tasks, start=1):
            if task.id in seen:
                out.append(Violation("duplicate task", task.id))
            seen.add(task.id)
            if task.job != job.id:
                out.append(Violation("wrong job", task.id, f"{task.job} != {job.id}"))
            if task.index != pos:
                out.append(Violation("bad index", task.id, f"{task.index} != {pos}"))
            if task.family not in known:
                out.append(Violation("unknown family", task.id, str(task.family)))
            for p in task.preds:
                if p not in index_of:
                    out.append(Violation("foreign predecessor", task.id, str(p)))
                elif index_of[p] >= task.index:
                    # also rules out cycles: every edge goes to a larger index
                    out.append(Violation("forward precedence", task.id, str(p)))
    return out
