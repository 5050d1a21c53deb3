"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--subjects 2000] [--features 40] [--repeat 5]

Reports the best-of-``repeat`` wall time per kernel and per full metric
evaluation (scores for one feature subset, then EER).  Both backends are
checked to give identical counts before timing.
"""

import argparse
import json
import sys
import time

import numpy as np

from persistplan import _backend, _kernels_py
from persistplan.featuregen import BandConfig, generate_band
from persistplan.metrics import eer_from_counts, threshold_counts
from persistplan.scoring import normalized_sessions, score_dataset


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--subjects", type=int, default=2000)
    ap.add_argument("--features", type=int, default=40)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", action="store_true", help="print results as JSON")
    args = ap.parse_args(argv)

    compiled = _backend.compiled
    if compiled is None:
        print("compiled kernels are not built; nothing to compare", file=sys.stderr)
        return 1

    ds = generate_band(BandConfig(0.65, args.subjects, args.features, seed=1))
    subset = np.arange(args.features)
    gallery, probe = normalized_sessions(ds, subset)
    block = np.ascontiguousarray(gallery @ probe.T)
    thresholds = np.unique(np.einsum("ij,ij->i", gallery, probe))
    T = thresholds.shape[0]
    idx = np.arange(args.subjects)

    def binning(k):
        def run():
            hist = np.zeros(T + 1, dtype=np.int64)
            equal = np.zeros(T, dtype=np.int64)
            binmax = np.full(T + 1, -np.inf)
            k.bin_block(block, 0, thresholds, hist, equal, binmax, True)
            return hist, equal, binmax
        return run

    for a, b in zip(binning(_kernels_py)(), binning(compiled)()):
        np.testing.assert_array_equal(a, b)
    scores = score_dataset(ds, subset)
    assert threshold_counts(scores, _kernels_py).imp_gt.tolist() == threshold_counts(scores, compiled).imp_gt.tolist()

    pairs = args.subjects * (args.subjects - 1)
    rows = []
    for name, fn_py, fn_c in [
        ("bin_block", binning(_kernels_py), binning(compiled)),
        ("rowwise_dot", lambda: _kernels_py.rowwise_dot(gallery, probe, idx, idx),
         lambda: compiled.rowwise_dot(gallery, probe, idx, idx)),
        ("evaluation", lambda: eer_from_counts(threshold_counts(score_dataset(ds, subset), _kernels_py)),
         lambda: eer_from_counts(threshold_counts(score_dataset(ds, subset), compiled))),
    ]:
        tp, tc = best_of(fn_py, args.repeat), best_of(fn_c, args.repeat)
        rows.append({"kernel": name, "python_s": tp, "compiled_s": tc, "speedup": tp / tc})

    if args.json:
        print(json.dumps({"subjects": args.subjects, "features": args.features, "impostor_pairs": pairs,
                          "results": rows}, indent=2))
    else:
        print(f"{args.subjects} subjects, {args.features} features, {pairs:,} impostor pairs")
        print(f"{'kernel':<12} {'python':>10} {'compiled':>10} {'speedup':>8}")
        for r in rows:
            print(f"{r['kernel']:<12} {r['python_s'] * 1e3:8.1f}ms {r['compiled_s'] * 1e3:8.1f}ms {r['speedup']:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
