# Waiting for a busy environment can beat a cold start.
#
# Two jobs on one machine with room for two environments. Job 0 is a single
# task of family 2; job 1 is a quick family-1 task followed by another
# family-2 task. Family 2 takes 100 time units to set up.

from faasched import ClusterConfig, PolicyConfig, simulate
from faasched.metrics import mean_latency
from faasched.model import FamilySpec, Instance, Job, TaskSpec

families = (
    FamilySpec(1, duration=10, size=1, setup=1),
    FamilySpec(2, duration=10, size=1, setup=100),
)
jobs = (
    Job(0, (TaskSpec(0, 0, 1, 2),)),
    Job(1, (TaskSpec(1, 1, 1, 1), TaskSpec(2, 1, 2, 2, preds=(1,)))),
)
inst = Instance(families, jobs, {"id": "wait-demo"})
cluster = ClusterConfig(machines=1, capacity=2)

for text in ("FIFO,LRU,wait,def", "FIFO,LRU,nowait,def"):
    r = simulate(inst, cluster, PolicyConfig.parse(text))
    b = r.tasks[2]
    print(f"{text:22s} task B runs [{b.start}, {b.end})  mean latency {mean_latency(r)}")

# With waiting, B queues behind job 0's task on the warm env and ends at 120.
# Without it, the idle family-1 env is evicted and a fresh family-2 env is
# built, so B ends one unit later.
