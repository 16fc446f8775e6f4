#!/usr/bin/env python3
"""Registry benchmark: AR2 vs FAR2-PK vs FAR2-RK with performance profiles.

Runs every registry problem at the requested dimension, writes reports.csv /
reports.json into the output directory, and emits one (tau, p) profile series
per solver for both cost metrics.
"""

import argparse
import os
import time

from far2.harness import (ProblemSpec, SuiteConfig, performance_profile,
                          run_suite, summarize, write_profile_series,
                          write_reports_csv, write_reports_json)
from far2.problems import REGISTRY, registry_names


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=100, help="problem dimension")
    ap.add_argument("--out", default="bench_out")
    ap.add_argument("--solvers", nargs="+",
                    default=["AR2", "FAR2-PK", "FAR2-RK"])
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--timing", action="store_true")
    args = ap.parse_args()

    problems = []
    for name in registry_names():
        entry = REGISTRY[name]
        n = max(args.n, entry.min_n)
        n += (-n) % entry.multiple_of
        problems.append(ProblemSpec(kind="registry", name=name, n=n))

    cfg = SuiteConfig(solvers=args.solvers, problems=problems,
                      out=args.out, jobs=args.jobs, timing=args.timing)
    os.makedirs(args.out, exist_ok=True)
    t0 = time.perf_counter()
    reports = run_suite(cfg)
    print(summarize(reports))
    print(f"suite wall time: {time.perf_counter() - t0:.1f}s")

    write_reports_csv(reports, os.path.join(args.out, "reports.csv"),
                      timing=args.timing)
    write_reports_json(reports, os.path.join(args.out, "reports.json"))
    for metric in ("n_fact", "n_nli"):
        table = performance_profile(reports, metric)
        paths = write_profile_series(table, args.out)
        print(f"{metric} profiles: {', '.join(paths)}")


if __name__ == "__main__":
    main()
