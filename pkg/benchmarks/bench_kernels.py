"""Time the compiled and numpy kernels on the same stepping workloads.

    python benchmarks/bench_kernels.py --m 400 --steps 2000
"""

import argparse
import time

import numpy as np

from mcf_lab import kernels
from mcf_lab.model import Grid, Polynomial, sample
from mcf_lab.oracle import DPConfig, build_dp_operator
from mcf_lab.parabolic import RadialStepper
from mcf_lab.scenarios import build


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_advance(m, steps, eta, backend, repeat):
    p = build("linear-f").problem
    st = RadialStepper(p, Grid(p.R, m), eta, backend=backend)
    dt = 0.9 * st.stable_dt()
    u0 = np.cos(3.0 * st.grid.nodes)

    def run():
        st.run(u0.copy(), dt, steps)
    return best_of(run, repeat)


def bench_dp(m, steps, backend, repeat):
    p = build("linear-f").problem
    op = build_dp_operator(p, DPConfig(m=m))
    V0 = sample(Polynomial((0.0, 1.0)), op.grid).values.copy()

    def run():
        kernels.dp_advance(V0.copy(), op.idx, op.wt, op.reward, steps,
                           backend=backend)
    return best_of(run, repeat)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, default=400)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if kernels.BACKEND != "cython":
        print("compiled kernels not built; only the numpy backend is timed")
    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    rows = []
    for label, fn in [
        ("advance eta=0.1", lambda b: bench_advance(args.m, args.steps, 0.1, b, args.repeat)),
        ("advance eta=0", lambda b: bench_advance(args.m, args.steps, 0.0, b, args.repeat)),
        ("dp_advance", lambda b: bench_dp(args.m, args.steps, b, args.repeat)),
    ]:
        t = {b: fn(b) for b in backends}
        rows.append((label, t))
    print(f"m={args.m} steps={args.steps} (best of {args.repeat})")
    print(f"{'kernel':<18}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for label, t in rows:
        py = t["python"]
        cy = t.get("cython", float("nan"))
        print(f"{label:<18}{py:>12.4f}{cy:>12.4f}{py / cy:>10.1f}")


if __name__ == "__main__":
    main()
