"""Compare the numpy and numba kernel backends, and time a full analysis.

    python benchmarks/bench_kernels.py [--frames 200] [--resolution 4] [--repeat 5]

Numba compile time is reported separately; kernel timings are taken after a
warm-up call.
"""
import argparse
import time

import numpy as np

from motionphys import kernels, synth
from motionphys.config import AnalysisConfig
from motionphys.core import GroundPlane
from motionphys.dynamics import sequence_masses
from motionphys.metrics import analyze_metrics


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_calls(backend, verts, masses, plane, cfg, fps):
    com = backend.com_series(verts, masses)
    return {
        "lowest_heights": lambda: backend.lowest_heights(verts, plane.origin, plane.normal),
        "com_series": lambda: backend.com_series(verts, masses),
        "angular_momentum_rate": lambda: backend.angular_momentum_rate(verts, masses, com, fps),
        "pressure_cop": lambda: backend.pressure_cop(verts, plane.origin, plane.normal, cfg.alpha, cfg.gamma),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=200)
    ap.add_argument("--resolution", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    seq = synth.sway(synth.humanoid(resolution=args.resolution), T=args.frames, seed=0)
    cfg = AnalysisConfig()
    plane = GroundPlane()
    masses = sequence_masses(seq, cfg).vertex_masses
    verts = np.ascontiguousarray(seq.vertices)
    print(f"sequence: {seq.num_frames} frames x {seq.body.num_vertices} vertices")

    if kernels.numba_kernels is None:
        print("numba unavailable; numpy backend only")
        backends = [kernels.numpy_kernels]
    else:
        backends = [kernels.numpy_kernels, kernels.numba_kernels]
        t0 = time.perf_counter()
        for fn in kernel_calls(kernels.numba_kernels, verts, masses, plane, cfg, seq.fps).values():
            fn()
        print(f"numba first-call (compile or cache load): {time.perf_counter() - t0:.3f} s")

    rows = {}
    for backend in backends:
        for name, fn in kernel_calls(backend, verts, masses, plane, cfg, seq.fps).items():
            rows.setdefault(name, {})[backend.name] = best_of(fn, args.repeat)
    print(f"{'kernel':<24}" + "".join(f"{b.name:>12}" for b in backends) + "     speedup")
    for name, t in rows.items():
        line = f"{name:<24}" + "".join(f"{t[b.name] * 1e3:>10.2f}ms" for b in backends)
        if "numba" in t:
            line += f"   {t['numpy'] / t['numba']:>8.1f}x"
        print(line)

    analyze_metrics(seq, config=cfg)
    total = best_of(lambda: analyze_metrics(seq, config=cfg), args.repeat)
    print(f"full five-metric analysis ({kernels.active.name} backend): {total:.3f} s")


if __name__ == "__main__":
    main()
