"""Compare the numba kernels with their pure-numpy fallbacks.

Run with ``python benchmarks/bench_accel.py [--n 500] [--repeat 5]``.
Each hot kernel is timed on identical inputs through both implementations
(after one warm-up call, so JIT compilation is excluded) and the maximum
absolute difference of the outputs is reported.  The end-to-end timing of
one structural-derivative estimate is measured in two subprocesses, one per
value of the ``DECONVIV_NUMBA`` flag.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from deconviv import charfn, kernels, simulation

END_TO_END = """
import time
from deconviv import simulation
from deconviv.density import BandwidthSet, EstimationContext
from deconviv.estimators import structural_derivative
s, _ = simulation.generate(simulation.MCDesign.design1(), {n}, simulation.substream(1, 0))
bw = BandwidthSet(1.0, 1.05, 2.92)
structural_derivative(0.0, 0.0, 0.7, EstimationContext(s, bw))
t = time.perf_counter()
for _ in range({repeat}):
    structural_derivative(0.0, 0.0, 0.7, EstimationContext(s, bw))
print((time.perf_counter() - t) / {repeat})
"""


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    u = rng.normal(0.0, 3.0, 200_000)
    sample, _ = simulation.generate(simulation.MCDesign.design1(), args.n, simulation.substream(1, 0))
    t = charfn.FrequencyGrid(1.0, 512).half

    cases = [(f"kernel {name} (2e5 points)",
              lambda impl, f=name: kernels.IMPLEMENTATIONS[impl][f](u))
             for name in ("k", "kd", "kcdf", "kk", "si")]
    cases.append((f"trig sum ({len(t)} x {args.n})",
                  lambda impl: charfn.trig_sum_impls[impl](t, sample.w2, sample.w1)))
    cases.append((f"LSCV pair sums (n = {args.n})",
                  lambda impl: np.array(simulation.lscv_impls[impl](sample.y, sample.x, 1.05, 2.92))))

    print(f"{'kernel':<34}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}{'max |diff|':>13}")
    for label, run in cases:
        tn = best_of(lambda: run("numba"), args.repeat)
        tp = best_of(lambda: run("numpy"), args.repeat)
        diff = np.max(np.abs(np.asarray(run("numba")) - np.asarray(run("numpy"))))
        print(f"{label:<34}{1e3 * tn:>12.2f}{1e3 * tp:>12.2f}{tp / tn:>10.1f}{diff:>13.2e}")

    code = END_TO_END.format(n=args.n, repeat=args.repeat)
    for flag in ("1", "0"):
        env = dict(os.environ, DECONVIV_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                             text=True, check=True)
        label = "numba" if flag == "1" else "numpy"
        print(f"end-to-end rho estimate ({label}): {1e3 * float(out.stdout):.1f} ms")


if __name__ == "__main__":
    main()
