"""Command-line interface.

Subcommands: `run` executes a suite from a config file, `profile` derives
performance-profile series from stored reports, `list` prints the problem
registry, `check` runs the derivative and invariant self-tests.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import harness, krylov, problems, secular
from .errors import ConfigError


def _add_common(p):
    p.add_argument("--config", default=None, help="suite config file")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--metric", choices=("fact", "nli"), default="fact")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--timing", action="store_true",
                   help="write measured wall time into the CSV")


def cmd_run(args) -> int:
    if not args.config:
        print("run: --config is required", file=sys.stderr)
        return 2
    cfg = harness.parse_config(args.config)
    if args.out is not None:
        cfg.out = args.out
    if args.format is not None:
        cfg.format = args.format
    if args.seed is not None:
        cfg.seed = args.seed
    if args.jobs is not None:
        cfg.jobs = args.jobs
    if args.timing:
        cfg.timing = True
    os.makedirs(cfg.out, exist_ok=True)
    reports = harness.run_suite(cfg)
    print(harness.summarize(reports))
    csv_path = os.path.join(cfg.out, "reports.csv")
    harness.write_reports_csv(reports, csv_path, timing=cfg.timing)
    json_path = os.path.join(cfg.out, "reports.json")
    if cfg.format == "json":
        harness.write_reports_json(reports, json_path)
        print(f"wrote {csv_path} and {json_path}")
    else:
        harness.write_reports_json(reports, json_path)
        print(f"wrote {csv_path} (and {json_path} for round-tripping)")
    return 0


def cmd_profile(args) -> int:
    outdir = args.out or "."
    src = os.path.join(outdir, "reports.json")
    if not os.path.exists(src):
        print(f"profile: no stored reports at {src}", file=sys.stderr)
        return 2
    reports = harness.read_reports_json(src)
    metric = "n_fact" if args.metric == "fact" else "n_nli"
    table = harness.performance_profile(reports, metric)
    paths = harness.write_profile_series(table, outdir)
    for solver in table.solvers:
        pts = table.series(solver)
        head = " ".join(f"({t:.3g},{p:.2f})" for t, p in pts[:6])
        print(f"{solver:<8s} {metric}: {head}{' ...' if len(pts) > 6 else ''}")
    print("wrote " + ", ".join(paths))
    return 0


def cmd_list(_args) -> int:
    for name in problems.registry_names():
        entry = problems.REGISTRY[name]
        divis = f", n % {entry.multiple_of} == 0" if entry.multiple_of > 1 else ""
        print(f"{name:<10s} n >= {entry.min_n}{divis:<14s} {entry.note}")
    print("classification: kind=logistic|sigmoid with source=synth or a LIBSVM path")
    return 0


def cmd_check(_args) -> int:
    failures = 0

    def report(name, ok, detail=""):
        nonlocal failures
        if not ok:
            failures += 1
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")

    for name in problems.registry_names():
        entry = problems.REGISTRY[name]
        n = max(entry.min_n, 8)
        n += (-n) % entry.multiple_of
        prob = problems.get_problem(name, n)
        eg, eh = problems.check_derivatives(prob, n_points=2, seed=1)
        report(f"derivatives {name}", eg <= 1e-5 and eh <= 1e-4,
               f"grad {eg:.2e} hess {eh:.2e}")

    data = problems.synth_classification(80, 6, seed=3)
    for label, obj in (("logistic", problems.logistic_objective(data)),
                       ("sigmoid", problems.sigmoid_objective(
                           problems.remap_labels(data, "01")))):
        eg, eh = problems.check_derivatives(obj, n_points=2, seed=2)
        report(f"derivatives {label}", eg <= 1e-5 and eh <= 1e-4,
               f"grad {eg:.2e} hess {eh:.2e}")

    lam = secular.solve_secular_reduced(np.array([1.0]), np.array([[1.0]]), 1.0).lam
    report("scalar secular root", abs(lam - (np.sqrt(5) - 1) / 2) < 1e-10,
           f"lambda {lam:.12f}")

    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(3, 12))
        A = rng.standard_normal((n, n))
        H = 0.5 * (A + A.T)
        basis = krylov.KrylovBasis.fresh_polynomial(rng.standard_normal(n), j_max=n)
        for _ in range(int(rng.integers(1, n))):
            krylov.poly_expand(H, basis)
            if basis.invariant:
                break
        worst = max(worst, krylov.orthonormality_defect(basis.V))
    report("krylov orthonormality", worst <= 1e-10, f"defect {worst:.2e}")

    return 1 if failures else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="far2",
        description="Adaptive cubic-regularization solvers with frozen "
                    "Krylov subspaces, plus a benchmark harness.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("run", cmd_run), ("profile", cmd_profile),
                     ("list", cmd_list), ("check", cmd_check)):
        p = sub.add_parser(name)
        _add_common(p)
        p.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
