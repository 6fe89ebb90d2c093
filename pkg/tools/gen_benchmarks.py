"""Regenerate the bundled benchmark problem files.

Dynamics are built with the package's polynomial arithmetic so that shifted
and scaled models are expanded exactly rather than by hand. Run from the
repository root::

    python3 tools/gen_benchmarks.py
"""

from __future__ import annotations

import json
from pathlib import Path

from clfsynth.poly import Polynomial

OUT = Path(__file__).resolve().parents[1] / "src" / "clfsynth" / "benchmarks"

# eps_q, eps_t1, eps_t3, delta per system number
RUN = {
    1: (0.01, 0.1, 0.01, 1e-5),
    2: (0.0001, 0.1, 0.1, 1e-6),
    3: (0.001, 0.1, 0.1, 1e-5),
    4: (0.0001, 0.1, 0.0001, 1e-6),
    5: (0.01, 0.1, 0.01, 1e-6),
    6: (0.05, 0.1, 0.05, 1e-5),
    7: (0.001, 0.1, 0.001, 1e-4),
    8: (0.1, 0.1, 0.1, 1e-7),
    9: (0.001, 0.1, 0.001, 1e-4),
    10: (0.05, 0.2, 0.05, 1e-4),
    11: (0.0001, 0.1, 0.01, 1e-5),
    12: (0.0001, 0.1, 0.1, 1e-5),
    13: (0.001, 0.5, 0.5, 1e-5),
    14: (1.0, 0.1, 10.0, 1e-5),
    15: (0.001, 0.1, 0.001, 1e-4),
    16: (0.0001, 0.1, 0.01, 1e-5),
    17: (0.001, 0.1, 0.1, 1e-6),
    18: (0.001, 0.1, 0.001, 1e-4),
    19: (0.001, 0.1, 0.001, 1e-4),
    20: (0.001, 0.1, 0.001, 1e-4),
}


def xs(n):
    return [Polynomial.var(i) for i in range(n)]


def C(v):
    return Polynomial.constant(v)


def linear(rows, n, consts=None):
    X = xs(n)
    out = []
    for k, row in enumerate(rows):
        p = C(consts[k] if consts else 0.0)
        for a, x in zip(row, X):
            p = p + a * x
        out.append(p)
    return out


def sin3(t):
    return t - (1.0 / 6.0) * t**3


def cos2(t):
    return C(1.0) - 0.5 * t**2


def heater(n_rooms, modes):
    """Rooms coupled to each other and to the outside; a heater adds ``50 - T_i``."""
    t = xs(n_rooms)
    T = [ti + 21.0 for ti in t]
    diag = 5.0 * (n_rooms - 1) + 0.5
    out = []
    for on in modes:
        f = []
        for i in range(n_rooms):
            p = -diag * T[i] + 5.0
            for j in range(n_rooms):
                if j != i:
                    p = p + 5.0 * T[j]
            if i in on:
                p = p - T[i] + 50.0
            f.append(0.01 * p)
        out.append(f)
    return out


def systems():
    S = {}
    x, y = xs(2)

    S[1] = dict(
        title="harmonic oscillator with bang-bang forcing",
        vars=["x", "y"],
        modes=[("u=-1", [y, -1.0 * x - 1.0]), ("u=1", [y, -1.0 * x + 1.0])],
        S=([-1, -1], [1, 1]), I=0.5, G=0.1,
    )
    S[2] = dict(
        title="sliding-motion example",
        vars=["x", "y"],
        modes=[("u=-4", [C(-4.0), y * y * x]), ("u=4", [C(4.0), y * y * x])],
        S=([-1, -1], [1, 1]), I=0.5, G=0.1,
    )
    S[3] = dict(
        title="cubic integrator chain",
        vars=["x", "y"],
        modes=[("u=-1", [y - x**3, C(-1.0)]), ("u=1", [y - x**3, C(1.0)])],
        S=([-1, -1], [1, 1]), I=0.5, G=0.05,
    )
    A4 = [
        [[0.0403, 0.5689], [0.6771, -0.2556]],
        [[0.2617, -0.2747], [1.2134, -0.1331]],
        [[1.4725, -1.2173], [0.0557, -0.0412]],
        [[-0.5217, 0.8701], [-1.4320, 0.8075]],
        [[-2.1707, -1.0106], [-0.0592, 0.6145]],
    ]
    S[4] = dict(
        title="five-mode linear switched system (individually unstable modes)",
        vars=["x", "y"],
        modes=[(f"q{k + 1}", linear(A, 2)) for k, A in enumerate(A4)],
        S=([-1, -1], [1, 1]), I=0.5, G=0.05,
    )
    B, J, k, R, L = 1e-4, 25e-5, 0.05, 0.5, 15e-4
    w, i = xs(2)
    S[5] = dict(
        title="DC motor, speed shifted so that 20 rad/s is the origin, voltage u in {-1, 1}",
        vars=["w", "i"],
        modes=[
            (f"u={u}", [-(B / J) * (w + 2.0) + (k / J) * i, -(k / L) * (w + 2.0) - (R / L) * i + 0.1 * u / L])
            for u in (-1, 1)
        ],
        S=([-1, -1], [1, 1]), I=0.4, G=0.05,
    )
    th, om = xs(2)
    g, h, l, m = 9.8, 2.0, 2.0, 0.5
    S[6] = dict(
        title="inverted pendulum on a cart, force u in {-30, 30}; sin and cos replaced by "
        "their degree-3 and degree-2 Taylor polynomials",
        vars=["theta", "omega"],
        modes=[
            (f"u={u}", [om, (g / l) * sin3(th) - (h / (m * l * l)) * om + (1.0 / (m * l)) * u * cos2(th)])
            for u in (-30, 30)
        ],
        S=([-1.5, -4], [1.5, 4]), I=0.5, G=0.2,
    )
    # the listed vector fields are written in the unshifted coordinates;
    # substitute i -> i + 1.35, v -> v + 5.65 to put the operating point at 0
    i_, v = xs(2)
    I_, V_ = i_ + 1.35, v + 5.65
    S[7] = dict(
        title="DC-DC boost converter, operating point i = 1.35, v = 5.65 moved to the origin",
        vars=["i", "v"],
        modes=[
            ("q1", [0.0167 * I_ + 0.3333, -0.0142 * V_]),
            ("q2", [-0.0183 * I_ - 0.0663 * V_ + 0.3333, 0.0711 * I_ - 0.0142 * V_]),
        ],
        S=([-0.7, -0.7], [0.7, 0.7]), I=0.3, G=0.04,
    )
    # original coordinates x = 5 z
    z1, z2 = xs(2)
    X1, X2 = 5.0 * z1, 5.0 * z2
    f8 = [
        [-X2 - 1.5 * X1 - 0.5 * X1**3, X1 - X2**2 + 2.0],
        [-X2 - 1.5 * X1 - 0.5 * X1**3, X1 - X2],
        [-X2 - 1.5 * X1 - 0.5 * X1**3 + 2.0, X1 + 10.0],
    ]
    S[8] = dict(
        title="three-mode nonlinear system shifted to (-0.75, 1.75) and scaled down by 5",
        vars=["x1", "x2"],
        modes=[(f"q{k + 1}", [0.2 * p for p in f]) for k, f in enumerate(f8)],
        S=([-0.45, -0.65], [0.45, 0.65]), I=0.2, G=0.05,
    )
    S[9] = dict(
        title="three-room heater, temperatures relative to 21 degrees; mode q_i heats room i",
        vars=["t1", "t2", "t3"],
        modes=[(f"q{k}", f) for k, f in enumerate(heater(3, [(), (0,), (1,), (2,)]))],
        S=([-5] * 3, [5] * 3), I=2.5, G=1.0,
    )
    A10 = [
        ([[4.15, -1.06, -6.7], [5.74, 4.78, -4.68], [26.38, -6.38, -8.29]], [1, -4, 1]),
        ([[-3.2, -7.6, -2], [0.9, 1.2, -1], [1, 6, 5]], [4, -2, -1]),
        ([[5.75, -16.48, -2.41], [9.51, -9.49, 19.55], [16.19, 4.64, 14.05]], [-2, 1, -1]),
        ([[-12.38, 18.42, 0.54], [-11.9, 3.24, -16.32], [-26.5, -8.64, -16.6]], [-1, 2, 1]),
    ]
    S[10] = dict(
        title="affine switched system stabilized away from every mode's equilibrium",
        vars=["x", "y", "z"],
        modes=[(f"q{k + 1}", linear(A, 3, b)) for k, (A, b) in enumerate(A10)],
        S=([-1] * 3, [1] * 3), I=0.5, G=0.1,
    )
    A11 = [
        [[1.8631, -0.0053, 0.9129], [0.2681, -6.4962, 0.0370], [2.2497, -6.7180, 1.6428]],
        [[-2.4311, -5.1032, 0.4565], [-0.0869, 0.0869, 0.0185], [0.0369, -5.9869, 0.8214]],
        [[0.0372, -0.0821, -2.7388], [0.1941, 0.2904, -0.1110], [-1.0360, 3.0486, -4.9284]],
    ]
    S[11] = dict(
        title="three-mode linear switched system",
        vars=["x", "y", "z"],
        modes=[(f"q{k + 1}", linear(A, 3)) for k, A in enumerate(A11)],
        S=([-1] * 3, [1] * 3), I=0.3, G=0.01,
    )
    A12 = [
        [[0.1764, 0.8192, -0.3179], [-1.8379, -0.2346, -0.7963], [-1.5023, -1.6316, 0.6908]],
        [[-0.0420, -1.0286, 0.6892], [0.3240, 0.0994, 1.8833], [0.5065, -0.1164, 0.3254]],
        [[-0.0952, -1.7313, 0.3868], [0.0312, 0.4788, 0.0540], [-0.6138, -0.4478, -0.4861]],
        [[0.2445, 0.1338, 1.1991], [0.7183, -1.0062, -2.5773], [0.1535, 1.3065, -2.0863]],
        [[-1.4132, -1.4928, -0.3459], [-0.5918, -0.0867, 0.9863], [0.5189, -0.0126, 0.6433]],
    ]
    S[12] = dict(
        title="five-mode linear switched system in three variables",
        vars=["x", "y", "z"],
        modes=[(f"q{k + 1}", linear(A, 3)) for k, A in enumerate(A12)],
        S=([-3] * 3, [3] * 3), I=1.0, G=0.1,
    )
    x3, y3, z3 = xs(3)
    S[13] = dict(
        title="Lorenz system with bang-bang forcing u in {-100, 100} on the first state",
        vars=["x", "y", "z"],
        modes=[
            (f"u={u}", [-10.0 * x3 + 10.0 * y3 + float(u), 28.0 * x3 - y3 - x3 * z3, x3 * y3 - 2.6667 * z3])
            for u in (-100, 100)
        ],
        S=([-5] * 3, [5] * 3), I=1.2, G=0.3,
    )
    Tc, T1, T2 = xs(3)
    room = [2.85 * T2 - 7.13 * T1 + 4.04 * Tc + 4.04, 2.85 * T1 - 7.13 * T2 + 4.04 * Tc + 4.04]
    S[14] = dict(
        title="radiant floor heating (core and two rooms), origin at Tc = 24, T1 = T2 = 23",
        vars=["Tc", "T1", "T2"],
        modes=[
            ("q1", [2.25 * T1 + 2.25 * T2 - 9.26 * Tc - 14.54] + room),
            ("q2", [2.25 * T1 + 2.25 * T2 - 4.5 * Tc + 4.5] + room),
        ],
        S=([-6] * 3, [6] * 3), I=3.0, G=1.0,
    )
    S[15] = dict(
        title="four-room heater; mode q_i heats room i",
        vars=["t1", "t2", "t3", "t4"],
        modes=[(f"q{k}", f) for k, f in enumerate(heater(4, [(), (0,), (1,), (2,), (3,)]))],
        S=([-5] * 4, [5] * 4), I=2.5, G=1.0,
    )
    A16 = [
        (
            [[-0.693, -1.099, 2.197, 3.296], [0, -1.792, 2.197, 4.394], [0, -1.097, 1.504, 2.197], [0, 0, 0, 0.406]],
            [-7.820, -8.735, -2.746, 3.244],
        ),
        (
            [[-1.792, -1.099, 2.197, 1.099], [0, 0.406, -2.197, 0], [0, 0, -0.693, 0], [-2.197, -1.099, 2.197, 1.504]],
            [6.696, 4.734, 2.773, 4.263],
        ),
        (
            [[0.406, 0, 0, 0], [1.099, -0.144, 0.549, -0.549], [0, 0.549, -0.144, -0.549], [1.099, 0, 0, -0.693]],
            [0.811, 1.910, 3.871, 4.970],
        ),
        (
            [[-0.693, 2.0, 0, 0], [0, -0.693, 0, 0], [0, 0, -0.693, 0], [0, 4.0, -4.0, -0.693]],
            [1.863, 4.159, 2.773, -1.069],
        ),
    ]
    modes16 = []
    for k, (A, bu) in enumerate(A16):
        for u in (-1, 1):
            modes16.append((f"q{k + 1},u={u}", linear(A, 4, [u * b for b in bu])))
    S[16] = dict(
        title="four-mode linear system with input u in {-1, 1}; each (mode, input) pair is one mode here",
        vars=["w", "x", "y", "z"],
        modes=modes16,
        S=([-1] * 4, [1] * 4), I=0.1, G=0.1,
    )
    w4, x4, y4, z4 = xs(4)
    S[17] = dict(
        title="translational oscillator with rotating actuator; u in {-10, 10}, sin replaced by "
        "its degree-3 Taylor polynomial",
        vars=["w", "x", "y", "z"],
        modes=[(f"u={u}", [x4, -1.0 * w4 + 0.1 * sin3(y4), z4, C(float(u))]) for u in (-10, 10)],
        S=([-1] * 4, [1] * 4), I=0.1, G=0.02,
    )
    S[18] = dict(
        title="five-room heater; mode q_i heats room i",
        vars=[f"t{i + 1}" for i in range(5)],
        modes=[(f"q{k}", f) for k, f in enumerate(heater(5, [()] + [(i,) for i in range(5)]))],
        S=([-5] * 5, [5] * 5), I=2.5, G=1.0,
    )
    S[19] = dict(
        title="six-room heater with two heaters; mode q_i heats rooms i and i+3",
        vars=[f"t{i + 1}" for i in range(6)],
        modes=[(f"q{k}", f) for k, f in enumerate(heater(6, [(), (0, 3), (1, 4), (2, 5)]))],
        S=([-5] * 6, [5] * 6), I=2.5, G=1.0,
    )
    S[20] = dict(
        title="nine-room heater with three heaters; mode q_i heats rooms i, i+3 and i+6",
        vars=[f"t{i + 1}" for i in range(9)],
        modes=[(f"q{k}", f) for k, f in enumerate(heater(9, [(), (0, 3, 6), (1, 4, 7), (2, 5, 8)]))],
        S=([-5] * 9, [5] * 9), I=2.5, G=1.0,
    )
    return S


# template overrides found by experiment (default: coefficients in [-10, 10], beta in [0, 100])
TEMPLATE = {
    7: {"degree": 2, "coef_lo": -100.0, "coef_hi": 100.0, "beta_lo": 0.0, "beta_hi": 1000.0},
    8: {"degree": 2, "coef_lo": -100.0, "coef_hi": 100.0, "beta_lo": 0.0, "beta_hi": 1000.0},
}
LAMBDA = {6: 2.5}


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for num, sd in systems().items():
        names = sd["vars"]
        n = len(names)
        eps_q, eps_t1, eps_t3, delta = RUN[num]
        lo, hi = sd["S"]
        doc = {
            "name": f"sys{num:02d}",
            "notes": sd["title"],
            "dim": n,
            "vars": names,
            "modes": [{"id": q, "dynamics": [p.format(names) for p in f]} for q, f in sd["modes"]],
            "S": {"lo": [float(v) for v in lo], "hi": [float(v) for v in hi]},
            "I": {"center": [0.0] * n, "radius": sd["I"]},
            "G": {"center": [0.0] * n, "radius": sd["G"]},
            "template": TEMPLATE.get(num, {"degree": 2, "coef_lo": -10.0, "coef_hi": 10.0, "beta_lo": 0.0, "beta_hi": 100.0}),
            "eps_q": eps_q,
            "lambda": LAMBDA.get(num, 2.0),
            "eps_t1": eps_t1,
            "eps_t3": eps_t3,
            "delta": delta,
        }
        (OUT / f"sys{num:02d}.json").write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {len(RUN)} files to {OUT}")


if __name__ == "__main__":
    main()
