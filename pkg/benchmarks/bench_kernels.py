"""Compiled kernel against the pure-Python fallback.

Runs the same replicas through both backends, checks that the outputs agree
bit for bit and reports wall time per replica and the speed-up.

    python benchmarks/bench_kernels.py --n 20 --T 0.5 --replicas 20
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from ssep_lab import Profile
from ssep_lab.mclab import pair_correlation_dual
from ssep_lab.seeding import derive
from ssep_lab.stirring import BACKENDS, LatticeWindow, ObservableSpec, SimulationPlan, sample_initial_configuration


def bench_simulate(backend: str, n: int, T: float, replicas: int, seed: int):
    prof = Profile.tanh_ramp(0.2, 0.8, 0.0, 1.0)
    times = tuple(T * k / 4 for k in range(1, 5))
    specs = [ObservableSpec("current", times, site=0), ObservableSpec("occupation", times, site=0),
             ObservableSpec("occupation", times, site=1)]
    window = LatticeWindow.around(n, [0, 1], T)
    plan = SimulationPlan(window, T, specs, prof, backend=backend)
    plan.centring()
    inits = [sample_initial_configuration(prof, window, derive(seed, 2 * r)) for r in range(replicas)]
    out, events = [], 0
    start = time.perf_counter()
    for r, init in enumerate(inits):
        s = plan.run(init, seed=derive(seed, 2 * r + 1))
        out.append(np.concatenate([s.raw[k] for k in sorted(s.raw)]))
        events += s.event_count
    return time.perf_counter() - start, np.array(out), events


def bench_dual(backend: str, n: int, replicas: int, seed: int):
    prof = Profile.tanh_ramp(0.2, 0.8, 0.0, 1.0)
    start = time.perf_counter()
    est = pair_correlation_dual(prof, n, 0, 1, 0.5, replicas, seed, backend=backend)
    return time.perf_counter() - start, est


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--T", type=float, default=0.5)
    ap.add_argument("--replicas", type=int, default=20)
    ap.add_argument("--dual-replicas", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    if "compiled" not in BACKENDS:
        print("compiled kernel not built; only the Python backend is available")
        return 1

    print(f"stirring simulation: n={args.n} T={args.T} replicas={args.replicas}")
    res = {b: bench_simulate(b, args.n, args.T, args.replicas, args.seed) for b in ("compiled", "python")}
    same = np.array_equal(res["compiled"][1], res["python"][1])
    for b, (dt, _, ev) in res.items():
        print(f"  {b:9s} {dt / args.replicas * 1e3:10.2f} ms/replica  {ev / dt / 1e6:8.2f} M events/s")
    print(f"  speed-up {res['python'][0] / res['compiled'][0]:.1f}x, identical outputs: {same}")

    print(f"dual pair estimator: n={args.n} replicas={args.dual_replicas}")
    dres = {b: bench_dual(b, args.n, args.dual_replicas, args.seed) for b in ("compiled", "python")}
    dsame = dres["compiled"][1].value == dres["python"][1].value
    for b, (dt, est) in dres.items():
        print(f"  {b:9s} {dt:8.3f} s  value={est.value:.6e}")
    print(f"  speed-up {dres['python'][0] / dres['compiled'][0]:.1f}x, identical outputs: {dsame}")
    return 0 if same and dsame else 1


if __name__ == "__main__":
    raise SystemExit(main())
