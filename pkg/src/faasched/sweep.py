"""Grid sweeps over instance parameters, clusters and policies, and their reports.

Every simulation in a sweep is addressed by its cell coordinates. Seeds are
derived from those coordinates with a stable hash, so a single CSV row can be
reproduced in isolation and the output does not depend on worker count.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import logging
import multiprocessing
import os
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator

from .engine import simulate
from .metrics import box_stats, mean_latency, normalize_relative, percentile_latency
from .model import ClusterConfig, Dependency, Instance, Ordering, PolicyConfig, Removal
from .workload import GenParams, dagify_instance, generate_chain_instance

log = logging.getLogger(__name__)

CSV_COLUMNS = [
    "instance_id", "seed", "n_f", "s_min", "s_max", "l_min", "l_max",
    "m", "Q", "policy", "mean_latency", "p95_latency",
]
BOX_COLUMNS = ["group", "q1", "median", "q3", "whisker_lo", "whisker_hi", "n_outliers", "count"]

GRID_FAMILIES = [10, 20, 50, 100, 200, 500]
GRID_SETUPS = [(0, 0), (10, 20), (100, 200), (1000, 2000)]
GRID_CHAINS = [(2, 10), (10, 20), (50, 100)]
GRID_MACHINES = [2, 5, 10, 20, 50]
GRID_CAPACITIES = [10, 20, 50]


def stable_seed(*parts) -> int:
    """63-bit seed from a sha256 of the parts' reprs."""
    digest = hashlib.sha256(repr(parts).encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def all_policy_strings() -> list[str]:
    return [str(p) for p in PolicyConfig.all_tuples()] + ["OW"]


@dataclass(frozen=True)
class SweepSpec:
    families: tuple[int, ...] = (50,)
    setups: tuple[tuple[int, int], ...] = ((10, 20),)
    chains: tuple[tuple[int, int], ...] = ((10, 20),)
    machines: tuple[int, ...] = (20,)
    capacities: tuple[int, ...] = (10,)
    instances: int = 20
    policies: tuple[str, ...] = ("OW", "EF,LRU,wait,start")
    seed: int = 0
    tasks: int = 1000
    dag: bool = False

    def __post_init__(self):
        for name in ("families", "setups", "chains", "machines", "capacities", "policies"):
            if not getattr(self, name):
                raise ValueError(f"sweep spec: {name} must be non-empty")
        if self.instances < 1:
            raise ValueError("sweep spec: instances must be >= 1")
        pols = []
        for p in self.policies:
            pols.extend(all_policy_strings() if p == "all" else [str(PolicyConfig.parse(p))])
        object.__setattr__(self, "policies", tuple(dict.fromkeys(pols)))
        object.__setattr__(self, "setups", tuple(tuple(s) for s in self.setups))
        object.__setattr__(self, "chains", tuple(tuple(c) for c in self.chains))

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        unknown = set(d) - set(known) - {"jobs"}
        if unknown:
            raise ValueError(f"sweep spec: unknown keys {sorted(unknown)}")
        for k in ("families", "setups", "chains", "machines", "capacities", "policies"):
            if k in known:
                known[k] = tuple(known[k])
        return cls(**known)

    @classmethod
    def load(cls, path) -> "SweepSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)

    def instance_cells(self) -> Iterator[tuple[int, tuple[int, int], tuple[int, int], int]]:
        for n_f, s, l in itertools.product(self.families, self.setups, self.chains):
            for idx in range(self.instances):
                yield n_f, s, l, idx

    def cluster_cells(self) -> list[tuple[int, int]]:
        return list(itertools.product(self.machines, self.capacities))

    @property
    def total_runs(self) -> int:
        n_inst = len(self.families) * len(self.setups) * len(self.chains) * self.instances
        return n_inst * len(self.cluster_cells()) * len(self.policies)


PRESETS: dict[str, SweepSpec] = {
    "full-grid": SweepSpec(
        families=tuple(GRID_FAMILIES),
        setups=tuple(GRID_SETUPS),
        chains=tuple(GRID_CHAINS),
        machines=tuple(GRID_MACHINES),
        capacities=tuple(GRID_CAPACITIES),
        instances=20,
        policies=("all",),
    ),
    "desk": SweepSpec(
        families=(50, 200),
        setups=((10, 20), (100, 200)),
        chains=((10, 20),),
        machines=(10, 20),
        capacities=(10,),
        instances=5,
        policies=tuple(
            f"{o},LRU,{w},{d}" for o in ("FIFO", "EF", "SW") for w in ("wait", "nowait") for d in ("def", "start")
        ) + ("OW",),
    ),
}


def instance_seed(spec: SweepSpec, n_f: int, setup, chain, idx: int) -> int:
    return stable_seed(spec.seed, spec.tasks, n_f, tuple(setup), tuple(chain), idx)


def instance_id(spec: SweepSpec, n_f: int, setup, chain, idx: int) -> str:
    kind = "dag" if spec.dag else "chain"
    return f"{kind}_n{spec.tasks}_nf{n_f}_s{setup[0]}-{setup[1]}_l{chain[0]}-{chain[1]}_i{idx}"


def build_instance(spec: SweepSpec, n_f: int, setup, chain, idx: int) -> Instance:
    seed = instance_seed(spec, n_f, setup, chain, idx)
    inst = generate_chain_instance(
        GenParams(n=spec.tasks, n_f=n_f, setup_range=tuple(setup), chain_range=tuple(chain), seed=seed)
    )
    if spec.dag:
        inst = dagify_instance(inst, stable_seed(seed, "dag"))
    inst.meta["id"] = instance_id(spec, n_f, setup, chain, idx)
    return inst


def sim_seed(inst_seed: int, m: int, Q: int, policy: str) -> int:
    return stable_seed(inst_seed, m, Q, policy)


def format_mean(value) -> str:
    return repr(float(value))


def _run_instance(args) -> tuple[list[dict], list[str]]:
    spec, coords, todo = args
    n_f, setup, chain, idx = coords
    rows, errors = [], []
    try:
        inst = build_instance(spec, n_f, setup, chain, idx)
    except Exception as exc:  # reported, sweep continues
        return [], [f"{instance_id(spec, *coords)}: {exc!r}"]
    iseed = instance_seed(spec, *coords)
    for m, Q, policy in todo:
        try:
            result = simulate(inst, ClusterConfig(m, Q), PolicyConfig.parse(policy), seed=sim_seed(iseed, m, Q, policy))
        except Exception as exc:
            errors.append(f"{inst.instance_id} m={m} Q={Q} {policy}: {exc!r}")
            continue
        rows.append({
            "instance_id": inst.instance_id,
            "seed": iseed,
            "n_f": n_f,
            "s_min": setup[0],
            "s_max": setup[1],
            "l_min": chain[0],
            "l_max": chain[1],
            "m": m,
            "Q": Q,
            "policy": policy,
            "mean_latency": format_mean(mean_latency(result)),
            "p95_latency": percentile_latency(result, 95),
        })
    return rows, errors


def _row_key(row: dict) -> tuple:
    return (row["instance_id"], int(row["m"]), int(row["Q"]), row["policy"])


def read_rows(path) -> list[dict]:
    if not os.path.exists(path):
        return []
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _write_rows(path, rows: Iterable[dict]) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in CSV_COLUMNS})
    os.replace(tmp, path)


@dataclass
class SweepOutcome:
    executed: int = 0
    skipped: int = 0
    errors: list[str] = field(default_factory=list)


def run_sweep(spec: SweepSpec, out_path, jobs: int = 1, progress=None) -> SweepOutcome:
    """Run every missing (instance, cluster, policy) cell and write the CSV.

    Rows already present in ``out_path`` are kept and skipped. New rows are
    appended as they finish, then the file is rewritten in canonical cell
    order so that it is byte-identical for any ``jobs``.
    """
    existing = read_rows(out_path)
    done = {_row_key(r) for r in existing}
    outcome = SweepOutcome()
    canonical: list[tuple] = []
    work = []
    for coords in spec.instance_cells():
        iid = instance_id(spec, *coords)
        todo = []
        for m, Q in spec.cluster_cells():
            for policy in spec.policies:
                key = (iid, m, Q, policy)
                canonical.append(key)
                if key in done:
                    outcome.skipped += 1
                else:
                    todo.append((m, Q, policy))
        if todo:
            work.append((spec, coords, todo))

    if not existing:
        _write_rows(out_path, [])
    new_rows: list[dict] = []
    with open(out_path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        if jobs > 1 and len(work) > 1:
            ctx = multiprocessing.get_context("spawn" if os.name == "nt" else "fork")
            with ctx.Pool(jobs) as pool:
                _drain(pool.imap_unordered(_run_instance, work), writer, fh, new_rows, outcome, progress)
        else:
            _drain(map(_run_instance, work), writer, fh, new_rows, outcome, progress)

    order = {k: i for i, k in enumerate(canonical)}
    merged = {(_row_key(r)): r for r in existing}
    for r in new_rows:
        merged[_row_key(r)] = r
    rows = sorted(merged.values(), key=lambda r: (order.get(_row_key(r), len(order)),) + _row_key(r))
    _write_rows(out_path, rows)
    return outcome


def _drain(results, writer, fh, new_rows, outcome, progress):
    for rows, errors in results:
        for row in rows:
            writer.writerow(row)
        fh.flush()
        new_rows.extend(rows)
        outcome.executed += len(rows)
        outcome.errors.extend(errors)
        for e in errors:
            log.error("cell failed: %s", e)
        if progress is not None:
            progress(outcome.executed + len(outcome.errors))


# -- reporting ---------------------------------------------------------------

DIMENSIONS = ("ordering", "removal", "wait", "dependency", "policy")


def _dimension_values(dim: str) -> list[str]:
    if dim == "ordering":
        return [o.value for o in Ordering]
    if dim == "removal":
        return [r.value for r in Removal]
    if dim == "wait":
        return ["nowait", "wait"]
    if dim == "dependency":
        return [d.value for d in Dependency]
    return all_policy_strings()


def relative_performance(rows: Iterable[dict], vary: str) -> dict[str, list[float]]:
    """Normalized latencies per value of ``vary``.

    Rows are grouped by instance, cluster and every policy component except
    the varied one; each group is divided by its minimum. OW only takes part
    when the whole policy is varied.
    """
    if vary not in DIMENSIONS:
        raise ValueError(f"unknown dimension {vary!r}")
    groups: dict[tuple, dict[str, float]] = defaultdict(dict)
    for row in rows:
        policy = row["policy"]
        base = (row["instance_id"], int(row["m"]), int(row["Q"]))
        if vary == "policy":
            key, value = base, policy
        else:
            if policy == "OW":
                continue
            parts = policy.split(",")
            i = DIMENSIONS.index(vary)
            value = parts[i]
            key = base + tuple(parts[:i] + ["*"] + parts[i + 1:])
        groups[key][value] = float(row["mean_latency"])
    present = {v for g in groups.values() for v in g}
    relative = normalize_relative(groups, expected=present)
    out: dict[str, list[float]] = defaultdict(list)
    for values in relative.values():
        for v, r in values.items():
            out[v].append(float(r))
    order = _dimension_values(vary)
    return {v: out[v] for v in sorted(out, key=lambda v: order.index(v) if v in order else len(order))}


def report_rows(rows: Iterable[dict], vary: str) -> list[dict]:
    out = []
    for value, data in relative_performance(rows, vary).items():
        b = box_stats(data)
        out.append({
            "group": value,
            "q1": repr(b.q1),
            "median": repr(b.median),
            "q3": repr(b.q3),
            "whisker_lo": repr(b.whisker_lo),
            "whisker_hi": repr(b.whisker_hi),
            "n_outliers": b.n_outliers,
            "count": len(data),
        })
    return out


def format_report(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BOX_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def resimulate_row(spec: SweepSpec, row: dict):
    """Re-run the simulation behind one CSV row; returns the SimResult."""
    coords = None
    for c in spec.instance_cells():
        if instance_id(spec, *c) == row["instance_id"]:
            coords = c
            break
    if coords is None:
        raise KeyError(row["instance_id"])
    inst = build_instance(spec, *coords)
    m, Q, policy = int(row["m"]), int(row["Q"]), row["policy"]
    iseed = instance_seed(spec, *coords)
    return simulate(inst, ClusterConfig(m, Q), PolicyConfig.parse(policy), seed=sim_seed(iseed, m, Q, policy))
