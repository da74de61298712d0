import json
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_instance
from faasched.errors import InvalidParams, NotAChain, ParseError, ValidationError
from faasched.workload import (
    GenParams,
    dagify_instance,
    dumps_instance,
    generate_chain_instance,
    loads_instance,
    read_instance,
    write_instance,
)


def test_forced_single_job():
    inst = generate_chain_instance(GenParams(n=5, chain_range=(5, 5), seed=1))
    assert inst.n_jobs == 1 and len(inst.jobs[0].tasks) == 5
    assert inst.is_chain()


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 300), lo=st.integers(1, 30), span=st.integers(0, 30), seed=st.integers(0, 2**32))
def test_job_lengths_partition_n(n, lo, span, seed):
    lo = min(lo, n)
    hi = min(lo + span, n)
    inst = generate_chain_instance(GenParams(n=n, n_f=7, chain_range=(lo, hi), seed=seed))
    lengths = [len(j.tasks) for j in inst.jobs]
    assert sum(lengths) == n
    assert all(lo <= k <= hi for k in lengths[:-1])
    assert 1 <= lengths[-1] <= hi
    assert sorted(inst.task_by_id) == list(range(n))


def test_family_frequencies_look_uniform():
    counts = Counter()
    for seed in range(20):
        inst = generate_chain_instance(GenParams(n=1000, n_f=10, seed=seed))
        per = Counter(t.family for t in inst.iter_tasks())
        assert set(per) == set(range(1, 11))
        counts.update(per)
    expected = 20000 / 10
    chi2 = sum((counts[f] - expected) ** 2 / expected for f in range(1, 11))
    assert chi2 < 27.88  # 9 degrees of freedom, p = 0.001


def test_parameters_in_range():
    p = GenParams(n=400, n_f=30, setup_range=(100, 200), seed=9)
    inst = generate_chain_instance(p)
    for f in inst.families:
        assert 100 <= f.setup <= 200
        assert 1 <= f.duration <= 10 and 1 <= f.size <= 10


def test_generation_is_deterministic():
    p = GenParams(n=300, n_f=20, seed=42)
    assert dumps_instance(generate_chain_instance(p)) == dumps_instance(generate_chain_instance(p))
    assert dumps_instance(generate_chain_instance(p)) != dumps_instance(
        generate_chain_instance(GenParams(n=300, n_f=20, seed=43))
    )


@pytest.mark.parametrize(
    "params",
    [GenParams(n=5, chain_range=(1, 6)), GenParams(n_f=0), GenParams(setup_range=(5, 1)), GenParams(chain_range=(0, 3))],
)
def test_bad_params_rejected(params):
    with pytest.raises(InvalidParams):
        generate_chain_instance(params)


def test_dagify_short_jobs():
    inst = make_instance([(1, 0, 1)], [[1], [1, 1]])
    dag = dagify_instance(inst, 0)
    assert dag.jobs[0].tasks[0].preds == ()
    second = dag.jobs[1].tasks
    assert second[1].preds == (second[0].id,)


def test_dagify_third_task_parent_support():
    inst = make_instance([(1, 0, 1)], [[1, 1, 1]])
    seen = Counter()
    for seed in range(200):
        t1, t2, t3 = dagify_instance(inst, seed).jobs[0].tasks
        assert t3.preds in ((t1.id,), (t2.id,))
        seen[t3.preds] += 1
    assert len(seen) == 2 and min(seen.values()) > 50


def test_dagify_keeps_everything_else():
    inst = generate_chain_instance(GenParams(n=200, n_f=10, seed=5))
    dag = dagify_instance(inst, 6)
    assert dag.families == inst.families
    assert [[(t.id, t.family) for t in j.tasks] for j in dag.jobs] == [
        [(t.id, t.family) for t in j.tasks] for j in inst.jobs
    ]
    assert all(len(t.preds) <= 1 for t in dag.iter_tasks())
    assert dag.instance_id.startswith("dag_")


def test_dagify_rejects_non_chain():
    tree = make_instance([(1, 0, 1)], [[1, 1, 1]], parents={(0, 3): 1})
    with pytest.raises(NotAChain):
        dagify_instance(tree, 0)


def test_minimal_round_trip_is_byte_stable(tmp_path):
    inst = make_instance([(5, 3, 2)], [[1]])
    path = tmp_path / "one.json"
    write_instance(inst, path)
    first = path.read_text()
    back = read_instance(path)
    assert back == inst
    write_instance(back, path)
    assert path.read_text() == first


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32), dag=st.booleans())
def test_generated_round_trip(seed, dag):
    inst = generate_chain_instance(GenParams(n=1000, seed=seed))
    if dag:
        inst = dagify_instance(inst, seed)
    assert loads_instance(dumps_instance(inst)) == inst


def test_unknown_family_in_file(tmp_path):
    d = json.loads(dumps_instance(make_instance([(5, 3, 2)], [[1]])))
    d["jobs"][0]["tasks"][0]["family"] = 4
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(d))
    with pytest.raises(ValidationError) as err:
        read_instance(path)
    assert err.value.violations[0].kind == "unknown family"


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("{", "line 1"),
        ("[]", "top level"),
        ('{"families": [], "jobs": [{"id": 0}]}', "jobs[0]"),
        ('{"families": [{"id": 1, "duration": "x", "size": 1, "setup": 0}], "jobs": []}', "duration"),
    ],
)
def test_parse_errors_carry_context(text, fragment):
    with pytest.raises(ParseError, match=fragment.replace("[", r"\[")):
        loads_instance(text)
