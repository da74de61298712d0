# Compare a few list-scheduling variants with the OpenWhisk-like baseline
# on one generated workload of 1000 tasks.

from faasched import ClusterConfig, GenParams, PolicyConfig, generate_chain_instance, simulate
from faasched.metrics import mean_latency, percentile_latency

inst = generate_chain_instance(GenParams(n=1000, n_f=50, setup_range=(100, 200), chain_range=(10, 20), seed=3))
cluster = ClusterConfig(machines=20, capacity=10)
print(f"{inst.n_jobs} jobs, {inst.n_tasks} tasks, {inst.n_families} families")

policies = ["OW", "FIFO,LRU,nowait,def", "FIFO,LRU,wait,def", "EF,LRU,wait,start", "SW,MinTime,wait,stbr"]
base = None
for text in policies:
    r = simulate(inst, cluster, PolicyConfig.parse(text), seed=1)
    mean = float(mean_latency(r))
    base = base or mean
    print(f"{text:22s} mean {mean:8.1f}  p95 {percentile_latency(r, 95):6d}  "
          f"speedup vs OW {base / mean:4.2f}  envs {len(r.envs)}")
