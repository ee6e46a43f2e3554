"""Compiled kernels against the pure-Python/numpy fallback.

    python benchmarks/bench_numba.py [--sweeps 20000] [--repeat 3]

Each workload runs in two child processes, one with numba and one with
BINSWEEP_DISABLE_NUMBA=1, so the fallback column never touches compiled
code.  Outputs are hashed and must agree between the two paths.
"""
import argparse
import hashlib
import json
import os
import subprocess
import sys
import time

import numpy as np


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def digest(*arrays):
    h = hashlib.sha1()
    for a in arrays:
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()[:12]


def worker(sweeps, repeat):
    from binsweep import IsingLattice, SweepKernel
    from binsweep.ergodicity import strongly_connected_components, support_graph
    from binsweep.kernels import run_sweeps
    from binsweep.matrix import sweep_matrix
    from binsweep.proofgraph import check_subsets, exhaustive_masks
    from binsweep.rng import make_rng

    results = {}
    k = SweepKernel.build(IsingLattice(4, 4, True, 0.4), "modified", "chessboard")
    u = make_rng(0).random((sweeps, k.model.n))
    run_sweeps(k, 0, u[:2])  # compile outside the timer
    t, out = best_of(lambda: run_sweeps(k, 0, u)[0], repeat)
    results[f"chain sweeps (4x4, {sweeps} sweeps)"] = (t, digest(out))

    G = support_graph(sweep_matrix(SweepKernel.build(IsingLattice(3, 3, True, 1.0), "standard")))
    strongly_connected_components(G)
    t, out = best_of(lambda: strongly_connected_components(G)[0], repeat)
    results[f"tarjan ({G.size} states, {G.indices.size} edges)"] = (t, digest(out))

    masks = exhaustive_masks(4)
    check_subsets(masks[:10], 4)
    t, out = best_of(lambda: check_subsets(masks, 4), repeat)
    results[f"subset checks ({masks.size} subsets, n=4)"] = (t, digest(*out))
    return results


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sweeps", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        print(json.dumps(worker(args.sweeps, args.repeat)))
        return

    def child(disable):
        env = dict(os.environ, BINSWEEP_DISABLE_NUMBA="1" if disable else "0")
        cmd = [sys.executable, __file__, "--worker", "--sweeps", str(args.sweeps),
               "--repeat", str(args.repeat)]
        return json.loads(subprocess.run(cmd, env=env, capture_output=True, text=True,
                                         check=True).stdout)

    fast, slow = child(False), child(True)
    print(f"{'workload':<44}{'numba [s]':>12}{'fallback [s]':>14}{'speed-up':>10}")
    for name, (tf, hf) in fast.items():
        ts, hs = slow[name]
        if hf != hs:
            raise SystemExit(f"{name}: outputs differ between paths")
        print(f"{name:<44}{tf:>12.5f}{ts:>14.5f}{ts / tf:>9.0f}x")


if __name__ == "__main__":
    main()
