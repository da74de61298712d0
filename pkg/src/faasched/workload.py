"""Synthetic instance generation (chains and out-trees) and instance files."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, replace
from typing import Union

import numpy as np

from .errors import InvalidParams, NotAChain, ParseError, ValidationError
from .model import FamilySpec, Instance, Job, TaskSpec, validate_instance

PathLike = Union[str, "os.PathLike[str]"]


@dataclass(frozen=True)
class GenParams:
    n: int = 1000
    n_f: int = 50
    setup_range: tuple[int, int] = (10, 20)
    chain_range: tuple[int, int] = (10, 20)
    duration_range: tuple[int, int] = (1, 10)
    size_range: tuple[int, int] = (1, 10)
    seed: int = 0

    def check(self) -> None:
        lo, hi = self.chain_range
        if not 1 <= lo <= hi <= self.n:
            raise InvalidParams(f"chain range {self.chain_range} with n={self.n}")
        if self.setup_range[0] > self.setup_range[1] or self.setup_range[0] < 0:
            raise InvalidParams(f"setup range {self.setup_range}")
        if self.n_f < 1:
            raise InvalidParams(f"n_f={self.n_f}")
        for name, (a, b) in (("duration", self.duration_range), ("size", self.size_range)):
            if not 1 <= a <= b:
                raise InvalidParams(f"{name} range {(a, b)}")

    @property
    def tag(self) -> str:
        s, l = self.setup_range, self.chain_range
        return f"nf{self.n_f}_s{s[0]}-{s[1]}_l{l[0]}-{l[1]}_seed{self.seed}"


def _uniform(rng: np.random.Generator, lo: int, hi: int) -> int:
    return int(rng.integers(lo, hi + 1))


def generate_chain_instance(params: GenParams) -> Instance:
    """Random families, random family per task, tasks cut into random chains."""
    params.check()
    rng = np.random.default_rng(params.seed)
    families = []
    for fid in range(1, params.n_f + 1):
        setup = _uniform(rng, *params.setup_range)
        duration = _uniform(rng, *params.duration_range)
        size = _uniform(rng, *params.size_range)
        families.append(FamilySpec(fid, duration, size, setup))
    task_family = [_uniform(rng, 1, params.n_f) for _ in range(params.n)]

    unassigned = np.arange(params.n)
    jobs = []
    next_id = 0
    while len(unassigned):
        length = min(_uniform(rng, *params.chain_range), len(unassigned))
        picked = rng.choice(len(unassigned), size=length, replace=False)
        chosen = unassigned[picked]  # random order = chain order
        unassigned = np.delete(unassigned, picked)
        job_id = len(jobs)
        tasks = []
        for k, original in enumerate(chosen, start=1):
            preds = (next_id - 1,) if k > 1 else ()
            tasks.append(TaskSpec(next_id, job_id, k, task_family[original], preds))
            next_id += 1
        jobs.append(Job(job_id, tuple(tasks)))

    meta = {"id": f"chain_{params.tag}", "kind": "chain", "params": _params_meta(params)}
    return Instance(tuple(families), tuple(jobs), meta)


def _params_meta(params: GenParams) -> dict:
    d = asdict(params)
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def dagify_instance(instance: Instance, seed: int) -> Instance:
    """Turn every chain into an out-tree: each non-first task gets a uniformly
    drawn parent among the tasks preceding it in the chain."""
    if not instance.is_chain():
        raise NotAChain("dagify expects chain jobs")
    rng = np.random.default_rng(seed)
    jobs = []
    for job in instance.jobs:
        tasks = list(job.tasks)
        for k in range(1, len(tasks)):
            parent = tasks[int(rng.integers(k))]
            tasks[k] = replace(tasks[k], preds=(parent.id,))
        jobs.append(Job(job.id, tuple(tasks)))
    meta = dict(instance.meta)
    meta["id"] = str(meta.get("id", "instance")).replace("chain_", "dag_", 1)
    if meta["id"] == instance.meta.get("id"):
        meta["id"] = f"dag_{meta['id']}"
    meta["kind"] = "dag"
    meta["dag_seed"] = seed
    return Instance(instance.families, tuple(jobs), meta)


def instance_to_dict(instance: Instance) -> dict:
    return {
        "meta": instance.meta,
        "families": [
            {"id": f.id, "duration": f.duration, "size": f.size, "setup": f.setup}
            for f in instance.families
        ],
        "jobs": [
            {
                "id": job.id,
                "tasks": [{"id": t.id, "family": t.family, "preds": list(t.preds)} for t in job.tasks],
            }
            for job in instance.jobs
        ],
    }


def dumps_instance(instance: Instance) -> str:
    return json.dumps(instance_to_dict(instance), sort_keys=True, separators=(",", ":")) + "\n"


def _field(obj: dict, key: str, where: str, kind=int):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(f"{where}: missing field {key!r}")
    value = obj[key]
    if kind is int and (not isinstance(value, int) or isinstance(value, bool)):
        raise ParseError(f"{where}: field {key!r} must be an integer, got {value!r}")
    if kind is list and not isinstance(value, list):
        raise ParseError(f"{where}: field {key!r} must be an array")
    return value


def instance_from_dict(d: dict) -> Instance:
    if not isinstance(d, dict):
        raise ParseError("top level must be an object")
    families = []
    for i, f in enumerate(_field(d, "families", "instance", list)):
        where = f"families[{i}]"
        families.append(
            FamilySpec(
                _field(f, "id", where),
                _field(f, "duration", where),
                _field(f, "size", where),
                _field(f, "setup", where),
            )
        )
    jobs = []
    for j, job in enumerate(_field(d, "jobs", "instance", list)):
        where = f"jobs[{j}]"
        job_id = _field(job, "id", where)
        tasks = []
        for k, task in enumerate(_field(job, "tasks", where, list), start=1):
            twhere = f"{where}.tasks[{k - 1}]"
            preds = _field(task, "preds", twhere, list)
            if not all(isinstance(p, int) for p in preds):
                raise ParseError(f"{twhere}: preds must be integers")
            tasks.append(TaskSpec(_field(task, "id", twhere), job_id, k, _field(task, "family", twhere), tuple(preds)))
        jobs.append(Job(job_id, tuple(tasks)))
    meta = d.get("meta") or {}
    return Instance(tuple(families), tuple(jobs), meta)


def loads_instance(text: str) -> Instance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    instance = instance_from_dict(data)
    problems = validate_instance(instance)
    if problems:
        raise ValidationError(problems)
    return instance


def write_instance(instance: Instance, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_instance(instance))


def read_instance(path: PathLike) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return loads_instance(fh.read())
