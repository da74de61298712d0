# A small grid sweep written to CSV, then summarized as relative
# performance per ordering (each value divided by its group's best).

import os
import tempfile

from faasched.sweep import SweepSpec, format_report, read_rows, report_rows, run_sweep

spec = SweepSpec(
    families=(20,),
    setups=((10, 20), (100, 200)),
    chains=((10, 20),),
    machines=(5, 10),
    capacities=(10,),
    instances=3,
    tasks=300,
    policies=tuple(f"{o},LRU,wait,start" for o in ("FIFO", "EF", "SJF", "SW", "RT")) + ("OW",),
)
out = os.path.join(tempfile.mkdtemp(), "sweep.csv")
outcome = run_sweep(spec, out)
print(f"{outcome.executed} runs -> {out}")

rows = read_rows(out)
print(format_report(report_rows(rows, "ordering")))
print(format_report(report_rows(rows, "policy")))

# Running it again skips every cell already in the file.
print("rerun executed", run_sweep(spec, out).executed)
