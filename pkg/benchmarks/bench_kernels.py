"""Compare the numba and numpy backends on the two hot kernels and on an end-to-end Z evaluation.

Run: python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from famed import _kernels
from famed.asymptotics import QuadratureSpec, partition_modulus
from famed.potential import build_context
from famed.triangulation_core import load_bundled


def best(f, reps=5):
    f()  # warm-up (JIT compile for numba)
    ts = []
    for _ in range(reps):
        t = time.perf_counter()
        f()
        ts.append(time.perf_counter() - t)
    return min(ts)


def main():
    rng = np.random.default_rng(0)
    w, g = _kernels.phi_nodes(0.8, 0.3, 0.02, 2000)
    u = rng.uniform(-3, 3, 4000) + 1j * rng.uniform(-0.5, 0.5, 4000)
    x = rng.normal(size=(200_000, 2)) + 1j * rng.normal(size=(200_000, 2))
    pl = rng.normal(size=200_000) + 0j
    quad = np.array([[-0.3, 0.1], [0.1, -0.2]], dtype=complex)
    lin = np.array([0.1j, -0.2j])
    rows = []
    for name, f in [
        ("line_sum 4000x4001", lambda be: _kernels.line_sum(u, w, g, be)),
        ("gaussian_terms 2e5x2", lambda be: _kernels.gaussian_terms(x, pl, quad, lin, 0.0, be)),
    ]:
        a, b = f("numba"), f("numpy")
        err = float(np.max(np.abs(a - b)) / np.max(np.abs(b)))
        tn, tp = best(lambda: f("numba")), best(lambda: f("numpy"))
        rows.append((name, tn, tp, err))
    ctx = build_context(load_bundled("fig8"))
    z = {be: partition_modulus(ctx, ctx.alpha0, 1 / 16, QuadratureSpec(backend=be)).log_modulus for be in ("numba", "numpy")}
    tz = {be: best(lambda: partition_modulus(ctx, ctx.alpha0, 1 / 16, QuadratureSpec(backend=be)), reps=2)
          for be in ("numba", "numpy")}
    rows.append(("log|Z| at hbar=1/16", tz["numba"], tz["numpy"], abs(z["numba"] - z["numpy"])))
    print(f"{'kernel':28s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s} {'rel diff':>9s}")
    for name, tn, tp, err in rows:
        sp = tp / tn
        print(f"{name:28s} {tn:10.4f} {tp:10.4f} {sp:8.2f} {err:9.1e}")


if __name__ == "__main__":
    main()
