"""Time the compiled propagator against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--steps 8000] [--repeat 3]

Runs random Hermitian drift/drive pairs of a few sizes plus one full
two-transmon gate, and checks that both backends agree.
"""

import argparse
import time

import numpy as np

from czspectator import dynamics, kernels
from czspectator.device import TransmonSpec


def random_problem(n, steps, rng):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h0 = 20.0 * (a + a.conj().T)
    h1 = np.diag(rng.normal(size=n)).astype(complex) * 50.0
    t = np.linspace(0, 1, steps)
    fa = np.sin(np.pi * t)
    fb = np.sin(np.pi * (t + 0.5 / steps))
    psi = np.eye(n, dtype=complex)
    return h0, h1, fa, fb, psi


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        s = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - s)
    return min(times), out


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--steps", type=int, default=8000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)} (default {kernels.BACKEND})")
    rng = np.random.default_rng(0)
    print(f"{'case':>14} " + " ".join(f"{b:>10}" for b in backends) + "  speedup  max|diff|")
    for n in (2, 4, 9, 16):
        h0, h1, fa, fb, psi = random_problem(n, args.steps, rng)
        res = {}
        for b in backends:
            res[b] = best_of(lambda: kernels.evolve(h0, h1, fa, fb, 0.01, psi.copy(), backend=b), args.repeat)
        row(f"random n={n}", res)

    g1 = TransmonSpec("A", 4900.0, -300.0)
    g2 = TransmonSpec("B", 5500.0, -295.0)
    pulse = dynamics.PulseShape(dynamics.resonance_amplitude(g1, g2), 78.6, 1.0)
    res = {}
    for b in backends:
        res[b] = best_of(lambda: dynamics.simulate_full_pair(g1, g2, 4.5, pulse, backend=b), args.repeat)
        res[b] = (res[b][0], np.array([res[b][1].phi_c]))
    row("gate 3x3", res)


def row(label, res):
    names = list(res)
    line = f"{label:>14} " + " ".join(f"{res[b][0]:10.4f}" for b in names)
    if len(names) == 2:
        speed = res[names[1]][0] / res[names[0]][0]
        diff = np.abs(np.asarray(res[names[0]][1]) - np.asarray(res[names[1]][1])).max()
        line += f"  {speed:6.2f}x  {diff:.1e}"
    print(line)


if __name__ == "__main__":
    main()
