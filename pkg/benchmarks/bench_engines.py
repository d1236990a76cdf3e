"""Time the compiled kernel against the pure-Python engine on the same runs.

    python3 benchmarks/bench_engines.py --arrivals 20000 --repeat 3

Each policy is run on both backends; the outputs must be identical, and the
script exits non-zero if they are not.
"""

import argparse
import sys
import time

from mmvsim.config import POLICIES, SimulationConfig
from mmvsim.engine import BACKENDS, run, same_result


def best_time(cfg, backend, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = run(cfg, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--arrivals", type=int, default=20000)
    p.add_argument("--inter-arrival", type=float, default=8.0)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    if "cython" not in BACKENDS:
        print("compiled kernel not built; nothing to compare")
        return 1
    # keep releases per arrival at the full-scale ratio
    subs = 10000 * args.arrivals / 1_000_000
    ok = True
    print(f"{'policy':>10} {'python s':>10} {'cython s':>10} {'speedup':>8}  identical")
    for policy in POLICIES:
        cfg = SimulationConfig(policy=policy, total_arrivals=args.arrivals,
                               inter_arrival_mean=args.inter_arrival, subs_per_epoch=subs)
        tp, rp = best_time(cfg, "python", args.repeat)
        tc, rc = best_time(cfg, "cython", args.repeat)
        same = same_result(rp, rc)
        ok &= same
        print(f"{policy:>10} {tp:10.3f} {tc:10.4f} {tp / tc:8.1f}  {same}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
