"""Inverted pendulum with a known quadratic CLF.

Walks from a fixed V to a running controller:
  1. pick a level beta between the initial ball and the boundary of S,
  2. check the three certificate conditions with the falsifier,
  3. bound the second Lie derivatives to get a dwell time tau,
  4. run the time-triggered controller from (1, -2) and write the trace.

    python demos/pendulum.py [outdir]
"""

import json
import sys
from pathlib import Path

from clfsynth.cegis import choose_level, verify_clf
from clfsynth.model import load_benchmark
from clfsynth.runtime import check_rws, dwell, make_controller, simulate, write_trace_csv

HERE = Path(__file__).parent
out = Path(sys.argv[1] if len(sys.argv) > 1 else "out/pendulum")
out.mkdir(parents=True, exist_ok=True)

inst = load_benchmark("sys06")
a = json.loads((HERE / "data" / "pendulum_clf.json").read_text())["a"]
V = inst.template.polynomial(a)
print(f"V = {V.format(inst.system.vars)}")

# Any beta strictly inside (max V on I, min V on dS) separates the two sets.
beta, lower, upper = choose_level(inst, V, delta=1e-5)
print(f"admissible levels: ({lower:.4f}, {upper:.4f}); using beta = {beta:.4f}")

v = verify_clf(inst, a, beta, delta=1e-5)
print(f"verification: {v.status}, boxes per condition {list(v.boxes)}")

spec = make_controller(inst, a, beta, verified=v.ok)
dw = dwell(inst, spec, delta=1e-5)
for mode, e1, d in zip(inst.system.modes, dw.eps1, dw.dwell):
    print(f"  mode {mode}: Vddot <= {e1:.4g}, dwell {d:.3g} s")
print(f"controller period tau = {dw.tau:.3g} s (lambda = {spec.lam})")

trace = simulate(inst, spec, dw, [1.0, -2.0], horizon=20.0)
verdict = check_rws(trace, spec)
print(f"from (1, -2): {trace.reason} at t = {trace.t[-1]:.3f} s after {trace.switch_times.size} switches")
print(f"V decreasing at every period: {verdict.v_decreasing}; reach-while-stay: {verdict.ok}")

write_trace_csv(trace, out / "trace.csv", inst.system.vars, inst.system.modes)
print(f"trace written to {out / 'trace.csv'}")
