from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from conftest import make_instance
from faasched.engine import (
    Scheduler,
    find_environment_to_wait,
    find_unused_environment,
    place_new_environment,
    remove_and_place_environment,
    simulate,
)
from faasched.errors import FamilyMismatch, InfeasibleInstance
from faasched.metrics import mean_latency, validate_schedule
from faasched.model import ClusterConfig, PolicyConfig, Removal
from faasched.oracle import brute_force_optimal
from faasched.state import ClusterState
from faasched.workload import GenParams, dagify_instance, generate_chain_instance

ALL_POLICIES = PolicyConfig.all_tuples() + [PolicyConfig.ow()]


def P(text):
    return PolicyConfig.parse(text)


# -- whole simulations ------------------------------------------------------


@pytest.mark.parametrize("policy", ALL_POLICIES, ids=str)
def test_single_task_schedule_is_forced(policy):
    inst = make_instance([(5, 3, 2)], [[1]])
    r = simulate(inst, ClusterConfig(1, 10), policy, seed=4)
    (rec,) = r.tasks.values()
    assert (rec.start, rec.end) == (3, 8)
    assert [(e.created, e.init_done) for e in r.envs] == [(0, 3)]
    assert mean_latency(r) == 8


def test_chain_reuses_environment():
    inst = make_instance([(5, 3, 2)], [[1, 1]])
    r = simulate(inst, ClusterConfig(1, 10), P("FIFO,LRU,nowait,def"))
    a, b = r.tasks[0], r.tasks[1]
    assert (a.start, a.end) == (3, 8)
    assert (b.start, b.end, b.env) == (8, 13, a.env)
    assert r.job_latencies == {0: 13}
    assert brute_force_optimal(inst, ClusterConfig(1, 10)) == 13


def test_wait_joins_busy_environment(wait_instance):
    c = ClusterConfig(1, 2)
    r = simulate(wait_instance, c, P("FIFO,LRU,wait,def"))
    b = r.tasks[2]
    assert (b.start, b.end) == (110, 120)
    assert b.env == r.tasks[0].env
    assert mean_latency(r) == 115
    assert brute_force_optimal(wait_instance, c) == 115


def test_nowait_evicts_idle_environment(wait_instance):
    r = simulate(wait_instance, ClusterConfig(1, 2), P("FIFO,LRU,nowait,def"))
    b = r.tasks[2]
    assert (b.start, b.end) == (111, 121)
    f1_env = r.envs[r.tasks[1].env]
    assert f1_env.removed == 11
    assert mean_latency(r) == Fraction(231, 2)


def test_start_mode_on_wait_example(wait_instance):
    r = simulate(wait_instance, ClusterConfig(1, 2), P("EF,LRU,wait,start"))
    assert mean_latency(r) == 115


def test_infeasible_instance_raises():
    inst = make_instance([(5, 3, 11)], [[1]])
    with pytest.raises(InfeasibleInstance):
        simulate(inst, ClusterConfig(2, 10), P("FIFO,LRU,wait,def"))
    with pytest.raises(InfeasibleInstance):
        simulate(inst, ClusterConfig(2, 10), PolicyConfig.ow())


# -- scheduling_step -------------------------------------------------------


def test_step_on_empty_queue_is_identity():
    inst = make_instance([(5, 3, 2)], [[1]])
    s = Scheduler(inst, ClusterConfig(2, 10), P("EF,LRU,wait,stbr"))
    s.scheduling_step(4, [])
    assert s.state.envs == [] and s.state.records == {} and not s.queue


def test_def_mode_enqueues_successor_on_completion():
    inst = make_instance([(5, 3, 2)], [[1, 1]])
    s = Scheduler(inst, ClusterConfig(1, 10), P("FIFO,LRU,nowait,def"))
    s.enqueue(0, 0)
    s.scheduling_step(0, [])
    assert s.state.records[0].end == 8
    s.state.now = 5
    assert s.queue_dependent_tasks(0, completed_only=True) == []
    s.state.now = 8
    (q,) = s.queue_dependent_tasks(0, completed_only=True)
    assert (q.task, q.release) == (1, 8)


def test_start_mode_places_successor_ahead():
    inst = make_instance([(5, 3, 2)], [[1, 1]])
    s = Scheduler(inst, ClusterConfig(1, 10), P("FIFO,LRU,nowait,start"))
    s.enqueue(0, 0)
    s.scheduling_step(0, [])
    b = s.state.records[1]
    assert b.release == 8
    assert (b.start, b.end) == (8, 13)
    assert s.state.assigned_at[1] == 0
    assert not s.queue


def test_successors_enqueued_in_index_order():
    # out-tree: tasks 4 and 7 both hang off task 2
    parents = {(0, 3): 2, (0, 4): 2, (0, 5): 1, (0, 6): 1, (0, 7): 2}
    inst = make_instance([(1, 0, 1)], [[1] * 7], parents=parents)
    s = Scheduler(inst, ClusterConfig(1, 10), P("FIFO,LRU,nowait,def"))
    s.state.now = 100
    env = s.state.create_environment(inst.families[0], 0, 0)
    s.state.assign_task(env, 0, 0, 0)
    s.state.assign_task(env, 1, 1, 0)
    added = s.queue_dependent_tasks(1, completed_only=True)
    assert [inst.task_by_id[q.task].index for q in added] == [3, 4, 7]
    assert [q.seq for q in added] == sorted(q.seq for q in added)


# -- placement primitives ---------------------------------------------------


def _state(families, m, Q, jobs=None):
    inst = make_instance(families, jobs or [[i + 1 for i in range(len(families))]])
    return inst, ClusterState(inst, ClusterConfig(m, Q))


def test_find_unused_returns_idle_match():
    inst, st_ = _state([(5, 0, 2)], 3, 10)
    env = st_.create_environment(inst.families[0], 2, 0)
    st_.now = 0
    assert find_unused_environment(st_, inst.jobs[0].tasks[0]) is env


def test_find_unused_skips_busy():
    inst, st_ = _state([(5, 0, 2)], 1, 10, jobs=[[1, 1]])
    env = st_.create_environment(inst.families[0], 0, 0)
    st_.assign_task(env, 0, 0, 0)
    st_.now = 3
    assert find_unused_environment(st_, inst.jobs[0].tasks[1]) is None
    st_.now = 5  # ends exactly now: counts as idle
    assert find_unused_environment(st_, inst.jobs[0].tasks[1]) is env


def test_find_unused_prefers_lower_machine():
    inst, st_ = _state([(5, 0, 2)], 4, 10)
    on3 = st_.create_environment(inst.families[0], 3, 0)
    on1 = st_.create_environment(inst.families[0], 1, 0)
    assert on3.env_id < on1.env_id
    assert find_unused_environment(st_, inst.jobs[0].tasks[0]) is on1


def _busy_env(setup):
    inst, st_ = _state([(10, setup, 1)], 1, 10, jobs=[[1], [1]])
    env = st_.create_environment(inst.families[0], 0, 0)
    env.assigned.append(type("A", (), {"end": 110})())  # projected completion 110
    return inst, st_, env


def test_find_to_wait_boundary():
    inst, st_, env = _busy_env(100)
    assert find_environment_to_wait(st_, inst.jobs[1].tasks[0], 11) is env
    inst, st_, env = _busy_env(98)
    assert find_environment_to_wait(st_, inst.jobs[1].tasks[0], 11) is None


def test_find_to_wait_without_candidates():
    inst, st_ = _state([(10, 100, 1)], 1, 10)
    assert find_environment_to_wait(st_, inst.jobs[0].tasks[0], 11) is None


def test_place_new_first_fit():
    inst, st_ = _state([(1, 0, 4), (1, 0, 2)], 2, 10)
    st_.create_environment(inst.families[0], 0, 0)
    st_.create_environment(inst.families[0], 0, 0)
    env = place_new_environment(st_, inst.jobs[0].tasks[1], 0)
    assert env.machine == 0 and st_.free[0] == 0


def test_place_new_when_full():
    inst, st_ = _state([(1, 0, 10), (1, 0, 2)], 2, 10)
    st_.create_environment(inst.families[0], 0, 0)
    st_.create_environment(inst.families[0], 1, 0)
    assert place_new_environment(st_, inst.jobs[0].tasks[1], 0) is None


def test_place_new_skips_machine_without_room():
    inst, st_ = _state([(1, 0, 9), (1, 0, 5), (1, 0, 2)], 2, 10)
    st_.create_environment(inst.families[0], 0, 0)  # free 1
    st_.create_environment(inst.families[1], 1, 0)  # free 5
    env = place_new_environment(st_, inst.jobs[0].tasks[2], 0)
    assert env.machine == 1


def test_remove_and_place_evicts_idle():
    inst, st_ = _state([(1, 0, 10), (1, 0, 2)], 1, 10)
    old = st_.create_environment(inst.families[0], 0, 0)
    st_.now = 1
    env = remove_and_place_environment(st_, inst.jobs[0].tasks[1], 1, Removal.LRU)
    assert env is not None and old.removed_at == 1
    assert st_.resident[0] == [env]


def test_remove_and_place_never_evicts_busy():
    inst, st_ = _state([(5, 0, 10), (1, 0, 2)], 1, 10)
    old = st_.create_environment(inst.families[0], 0, 0)
    st_.assign_task(old, 0, 0, 0)
    st_.now = 2
    assert remove_and_place_environment(st_, inst.jobs[0].tasks[1], 2, Removal.LRU) is None
    assert old.removed_at is None


def test_assign_task_recurrence():
    inst, st_ = _state([(5, 3, 2)], 1, 10, jobs=[[1, 1, 1]])
    env = st_.create_environment(inst.families[0], 0, 0)
    assert env.projected_completion == 3
    a = env.assign(0, 1, 0)
    assert (a.start, a.end) == (3, 8)
    b = env.assign(1, 1, 0)
    assert (b.start, b.end) == (8, 13)


def test_assign_task_idle_gap():
    inst, st_ = _state([(5, 10, 2), (3, 10, 2)], 1, 10)
    env = st_.create_environment(inst.families[0], 0, 0)
    env.assign(0, 1, 0)
    assert env.projected_completion == 15
    env.family = inst.families[0].__class__(1, 3, 2, 10)  # p=3 for the second task
    a = env.assign(1, 1, 20)
    assert (a.start, a.end) == (20, 23)
    assert env.projected_completion == 23
    assert [x.start for x in env.assigned] == [10, 20]


def test_assign_task_rejects_other_family():
    inst, st_ = _state([(5, 3, 2), (5, 3, 2)], 1, 10)
    env = st_.create_environment(inst.families[0], 0, 0)
    with pytest.raises(FamilyMismatch):
        env.assign(1, 2, 0)


def test_projected_completion_of_fresh_env():
    inst, st_ = _state([(5, 7, 2)], 1, 10)
    env = st_.create_environment(inst.families[0], 0, 0)
    assert env.projected_completion == 7


def test_projected_completion_running_task():
    inst, st_ = _state([(5, 0, 2)], 1, 10)
    env = st_.create_environment(inst.families[0], 0, 7)
    env.assign(0, 1, 7)
    assert env.projected_completion == 12


# -- properties -------------------------------------------------------------


def small_instance(seed, n, n_f, setup, dag):
    lo = min(2, n)
    inst = generate_chain_instance(
        GenParams(n=n, n_f=n_f, setup_range=setup, chain_range=(lo, min(n, lo + 6)), seed=seed)
    )
    return dagify_instance(inst, seed + 1) if dag else inst


instances = st.builds(
    small_instance,
    seed=st.integers(0, 10**6),
    n=st.integers(1, 40),
    n_f=st.integers(1, 8),
    setup=st.sampled_from([(0, 0), (1, 5), (10, 20), (50, 100)]),
    dag=st.booleans(),
)
clusters = st.builds(ClusterConfig, machines=st.integers(1, 4), capacity=st.integers(10, 25))


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(inst=instances, cluster=clusters, policy=st.sampled_from(ALL_POLICIES), seed=st.integers(0, 100))
def test_schedules_are_valid_and_complete(inst, cluster, policy, seed):
    r = simulate(inst, cluster, policy, seed=seed)
    assert validate_schedule(inst, cluster, r) == []
    assert len(r.tasks) == inst.n_tasks
    assert all(rec.end > rec.start for rec in r.tasks.values())
    for job in inst.jobs:
        assert r.job_latencies[job.id] == max(r.tasks[t.id].end for t in job.tasks)
    hosted = {}
    for rec in r.tasks.values():
        hosted.setdefault(rec.env, []).append(rec.task)
    assert sorted(t for ts in hosted.values() for t in ts) == sorted(inst.task_by_id)


@settings(max_examples=40, deadline=None)
@given(inst=instances, cluster=clusters, policy=st.sampled_from(PolicyConfig.all_tuples()))
def test_no_task_starts_before_it_was_assigned(inst, cluster, policy):
    s = Scheduler(inst, cluster, policy)
    state = s.run()
    for tid, rec in state.records.items():
        assert rec.start >= state.assigned_at[tid]


@settings(max_examples=30, deadline=None)
@given(inst=instances, cluster=clusters, policy=st.sampled_from(ALL_POLICIES), seed=st.integers(0, 100))
def test_simulation_is_deterministic(inst, cluster, policy, seed):
    a = simulate(inst, cluster, policy, seed=seed)
    b = simulate(inst, cluster, policy, seed=seed)
    assert a.to_json() == b.to_json()


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 10**6),
    n=st.integers(1, 40),
    dag=st.booleans(),
    cluster=clusters,
    policy=st.sampled_from([p for p in PolicyConfig.all_tuples() if not p.wait]),
)
def test_zero_setup_makes_wait_irrelevant(seed, n, dag, cluster, policy):
    inst = small_instance(seed, n, 5, (0, 0), dag)
    waiting = PolicyConfig(policy.ordering, policy.removal, True, policy.dependency)
    a = simulate(inst, cluster, policy)
    b = simulate(inst, cluster, waiting)
    assert a.tasks == b.tasks
