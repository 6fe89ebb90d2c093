"""Run the bundled low-dimensional benchmarks and print a status table.

Equivalent to ``clfsynth bench`` restricted to the n = 2 and n = 3 systems,
with a per-problem timeout. System 2 alone takes a couple of minutes.

    python demos/bench_summary.py [timeout_seconds]
"""

import sys

from clfsynth.cegis import CegisConfig, synthesize
from clfsynth.model import load_benchmark
from clfsynth.report import bench_row, format_table

timeout = float(sys.argv[1]) if len(sys.argv) > 1 else 300.0
rows = []
for k in range(1, 15):
    inst = load_benchmark(k)
    cfg = CegisConfig.for_instance(inst, timeout=timeout)
    rows.append(bench_row(inst, cfg, synthesize(inst, cfg)))
    print(f"{inst.name}: {rows[-1]['status']}", file=sys.stderr)
print(format_table(rows))
