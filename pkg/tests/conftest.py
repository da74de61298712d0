import pytest

from faasched.model import FamilySpec, Instance, Job, TaskSpec

ACCEPTANCE_LINES: list[str] = []


def fam(fid, p, s, q):
    return FamilySpec(fid, duration=p, size=q, setup=s)


def make_instance(families, jobs, parents=None, meta=None):
    """Build an instance from ``families`` [(p, s, q), ...] and ``jobs`` [[family, ...], ...].

    Jobs are chains unless ``parents`` maps (job, index) -> parent index.
    """
    fams = tuple(fam(i, *f) for i, f in enumerate(families, start=1))
    tid = 0
    out = []
    for j, fl in enumerate(jobs):
        ids = []
        tasks = []
        for k, f in enumerate(fl, start=1):
            if k == 1:
                preds = ()
            elif parents and (j, k) in parents:
                preds = (ids[parents[(j, k)] - 1],)
            else:
                preds = (ids[-1],)
            tasks.append(TaskSpec(tid, j, k, f, preds))
            ids.append(tid)
            tid += 1
        out.append(Job(j, tuple(tasks)))
    return Instance(fams, tuple(out), dict(meta or {"id": "test"}))


@pytest.fixture
def wait_instance():
    # J0 = [C(f2)], J1 = [A(f1) -> B(f2)]
    return make_instance([(10, 1, 1), (10, 100, 1)], [[2], [1, 2]])


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
