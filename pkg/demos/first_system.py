"""Synthesis on the two-mode oscillator, one refinement at a time.

Each refuted candidate is printed with the condition that failed and the
state that refutes it. The final CLF is re-verified independently and then
used to steer a few random states of the certified region into G.

    python demos/first_system.py
"""

import numpy as np

from clfsynth.cegis import synthesize, verify_clf
from clfsynth.model import load_benchmark
from clfsynth.runtime import check_rws, dwell, make_controller, simulate

NAMES = {1: "boundary", 2: "initial set", 3: "decrease"}

inst = load_benchmark(1)
print(f"{inst.name}: {inst.nmodes} modes, template of {inst.template.size} monomials, eps_Q = {inst.eps_q}")


def show(old, new, c, cex):
    x = np.round(cex.witness.x, 4).tolist()
    print(f"  c = {np.round(c, 3).tolist()}: {NAMES[cex.condition]} fails at {x} (gamma = {cex.gamma:g})")


res = synthesize(inst, on_refine=show)
print(f"{res.status} after {res.iterations} refinements, {res.lp_calls} LPs, {res.timing['total']:.2f} s")
V = res.clf(inst)
print(f"V = {V.format(inst.system.vars)}, beta = {res.beta:.4f}")
print(f"independent check: {verify_clf(inst, res.a, res.beta).status}")

spec = make_controller(inst, res.a, res.beta, verified=True)
dw = dwell(inst, spec, delta=inst.delta)
print(f"tau = {dw.tau:.3g}")
rng = np.random.default_rng(0)
starts = []
while len(starts) < 3:
    x = rng.uniform(spec.S_lo, spec.S_hi)
    if spec.in_w(x) and not spec.in_goal(x):
        starts.append(x)
for x0 in starts:
    tr = simulate(inst, spec, dw, x0, horizon=50.0)
    v = check_rws(tr, spec)
    print(f"  from {np.round(x0, 3).tolist()}: {tr.reason} at t = {tr.t[-1]:.2f}, min gap {v.min_switch_gap / dw.tau:.1f} tau")
