# For tiny instances the exhaustive search gives the best achievable mean
# latency, which bounds every heuristic from below.

from faasched import ClusterConfig, GenParams, PolicyConfig, generate_chain_instance, simulate
from faasched.metrics import mean_latency, validate_schedule
from faasched.oracle import optimal_schedule

inst = generate_chain_instance(
    GenParams(n=6, n_f=2, setup_range=(2, 8), chain_range=(1, 3), duration_range=(1, 6), size_range=(1, 4), seed=11)
)
cluster = ClusterConfig(machines=1, capacity=5)

best, schedule = optimal_schedule(inst, cluster)
print("optimum", best, "valid:", validate_schedule(inst, cluster, schedule) == [])
for rec in sorted(schedule.tasks.values(), key=lambda r: r.start):
    print(f"  task {rec.task} (job {rec.job}, family {rec.family}) env {rec.env} [{rec.start}, {rec.end})")

gaps = sorted(
    (mean_latency(simulate(inst, cluster, p)) - best, str(p))
    for p in PolicyConfig.all_tuples() + [PolicyConfig.ow()]
)
print("best heuristic:", gaps[0][1], "gap", gaps[0][0])
print("worst heuristic:", gaps[-1][1], "gap", gaps[-1][0])
