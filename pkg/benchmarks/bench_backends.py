"""Compare the numba and numpy backends of the two hot kernels.

Run with ``python3 benchmarks/bench_backends.py [--points N] [--repeat R]``.
The resolvent sweep is timed on a full default-grid Case C spectrum; the
propagator on the two-photon full-space density matrix (81 components).
Both backends are checked to agree before any timing is reported.
"""

import argparse
import time

import numpy as np

from cascade_spectrum import _kernels
from cascade_spectrum.blocks import build_full_liouvillian
from cascade_spectrum.model import DetectorParams, SystemParams
from cascade_spectrum.spectrum import default_grid, sweep


def best_of(fn, repeat):
    fn()  # warm-up (compilation for numba)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=4001, help="grid points of the spectrum sweep")
    ap.add_argument("--steps", type=int, default=20000, help="RK4 steps of the propagation")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    params = SystemParams()
    detector = DetectorParams(mu=1.0, r1=1.0, r2=1.0)
    grid = default_grid(params, args.points)
    L = build_full_liouvillian(2, params).entries
    P = _kernels.rk4_propagator(L, 0.005)
    y0 = np.zeros(L.shape[0], complex)
    y0[2 * 9 + 2] = 1.0

    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    results, outputs = {}, {}
    original = _kernels.backend()
    try:
        for name in backends:
            _kernels.set_backend(name)
            outputs[name] = (sweep("C", grid, params, detector).values,
                             _kernels.propagate(P, y0, args.steps, 100))
            results[name] = (
                best_of(lambda: sweep("C", grid, params, detector), args.repeat),
                best_of(lambda: _kernels.propagate(P, y0, args.steps, 100), args.repeat),
            )
    finally:
        _kernels.set_backend(original)

    if len(backends) == 2:
        a, b = outputs["numba"], outputs["numpy"]
        spec_dev = np.max(np.abs(a[0] - b[0])) / np.max(np.abs(b[0]))
        prop_dev = np.max(np.abs(a[1] - b[1]))
        print(f"agreement: spectrum {spec_dev:.1e} (relative), propagation {prop_dev:.1e} (absolute)")

    print(f"{'backend':<8} {'sweep (' + str(args.points) + ' pts)':>20} {'propagate (' + str(args.steps) + ' steps)':>26}")
    for name, (ts, tp) in results.items():
        print(f"{name:<8} {ts * 1e3:>17.1f} ms {tp * 1e3:>23.1f} ms")
    if len(backends) == 2:
        ts = results["numpy"][0] / results["numba"][0]
        tp = results["numpy"][1] / results["numba"][1]
        print(f"speed-up {ts:>19.1f}x {tp:>25.1f}x")


if __name__ == "__main__":
    main()
