"""Benchmark the compiled dual-number core against the pure-Python
fallback.

The backend is chosen at import time, so each variant runs in its own
subprocess (``GPDLAB_PURE=1`` forces the fallback).  Two workloads:

* ``scalar``  -- first and second derivatives of a composite scalar
  expression, the innermost kernel of every chart computation;
* ``flow``    -- a right-invariant RK4 flow on the pair groupoid with a
  dual initial coordinate, the dominant cost of bisection checking.

Run from the repository root::

    python benchmarks/bench_dual.py
"""

import json
import os
import subprocess
import sys
import textwrap
import time

WORKLOAD = textwrap.dedent("""
    import json, time
    import numpy as np
    import gpdlab.dual as dm
    from gpdlab.dual import Dual
    from gpdlab.flow import TimeDependentSection, flow
    from gpdlab.algebroid import pair_section
    from gpdlab.groupoids import PairGroupoid
    from gpdlab.numerics import IntegrationParams, derivative, second_derivative

    def f(x):
        return dm.exp(0.3 * dm.sin(x)) / (2.0 + dm.cos(x) * dm.cos(x))

    def scalar(n):
        acc = 0.0
        for k in range(n):
            x = 0.001 * k
            acc += derivative(f, x) + second_derivative(f, x)
        return acc

    G = PairGroupoid()
    eta = TimeDependentSection.constant(
        pair_section(G, lambda x: 0.4 * dm.sin(x) + 0.2))
    params = IntegrationParams(steps=100)

    def flow_kernel(n):
        acc = 0.0
        for k in range(n):
            g0 = G.unit(np.array([Dual(0.01 * k, 1.0)]))
            out = flow(0.0, 1.0, g0, eta, params)
            acc += dm.value(out[0])
        return acc

    out = {"backend": dm.BACKEND}
    for name, fn, n in (("scalar", scalar, 20000), ("flow", flow_kernel, 40)):
        fn(max(1, n // 10))                       # warm up
        t0 = time.perf_counter()
        fn(n)
        out[name] = time.perf_counter() - t0
    print(json.dumps(out))
""")


def run(pure):
    env = dict(os.environ, GPDLAB_PURE="1" if pure else "0")
    res = subprocess.run([sys.executable, "-c", WORKLOAD], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    compiled = run(pure=False)
    pure = run(pure=True)
    print(f"{'workload':<10} {'compiled':>10} {'pure':>10} {'speedup':>9}")
    for name in ("scalar", "flow"):
        ratio = pure[name] / compiled[name]
        print(f"{name:<10} {compiled[name]:>9.3f}s {pure[name]:>9.3f}s "
              f"{ratio:>8.2f}x")
    if compiled["backend"] == pure["backend"]:
        print("note: compiled extension unavailable; both runs used the "
              f"'{compiled['backend']}' backend")


if __name__ == "__main__":
    main()
