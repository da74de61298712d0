# Jobs do not have to be chains: dagify re-links every task to a random
# earlier task of its job, giving out-trees with parallel branches.

from collections import Counter

from faasched import ClusterConfig, GenParams, PolicyConfig, dagify_instance, generate_chain_instance, simulate
from faasched.metrics import mean_latency

chain = generate_chain_instance(GenParams(n=1000, n_f=50, setup_range=(10, 20), seed=8))
tree = dagify_instance(chain, seed=9)

fanout = Counter(len(v) for v in tree.successors.values())
print("successor count histogram:", dict(sorted(fanout.items())))

cluster = ClusterConfig(machines=20, capacity=10)
for inst, kind in ((chain, "chains"), (tree, "out-trees")):
    ow = float(mean_latency(simulate(inst, cluster, PolicyConfig.ow(), seed=1)))
    ef = float(mean_latency(simulate(inst, cluster, PolicyConfig.parse("EF,LRU,wait,start"))))
    print(f"{kind:10s} OW {ow:7.1f}   EF,LRU,wait,start {ef:7.1f}")
