"""Benchmark harness.

Runs (solver, problem) suites described by a flat sectioned config file,
collects RunReports, serializes them as CSV/JSON, and derives Dolan-More
performance profiles from the stored cost counters.

CSV columns are fixed: problem, n, solver, status, n_nli, n_fact, n_refresh,
ave_K, n_sub, n_sec, f_final, gnorm_final, wall_s. Wall time is written as
0.000 unless timing is switched on, so reruns with identical configuration
and seeds are byte-identical.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .config import POLYNOMIAL, RATIONAL, SolverConfig
from .driver import IterationRecord, RunReport, ar2_solve, far2_solve
from .errors import ConfigError, ProfileError, SolverError
from .problems import (get_problem, load_libsvm, logistic_objective,
                       registry_names, remap_labels, sigmoid_objective,
                       synth_classification)
from .second_order import SecondOrderConfig, far2so_solve

SOLVER_NAMES = ("AR2", "FAR2-PK", "FAR2-RK", "FAR2-SO")
CSV_COLUMNS = ("problem", "n", "solver", "status", "n_nli", "n_fact",
               "n_refresh", "ave_K", "n_sub", "n_sec", "f_final",
               "gnorm_final", "wall_s")

# Stopping tolerances by problem family: 1e-6 on the analytic registry,
# 1e-3 on classification tasks.
EPS_REL_REGISTRY = 1.0e-6
EPS_REL_CLASSIFICATION = 1.0e-3


@dataclass(frozen=True)
class ProblemSpec:
    kind: str = "registry"        # registry | logistic | sigmoid
    name: str = ""
    n: int = 0
    N: int = 0
    seed: int = 0
    source: str = "synth"         # synth | path to a LIBSVM file

    @property
    def label(self) -> str:
        if self.kind == "registry":
            return self.name
        src = "synth" if self.source == "synth" else os.path.basename(self.source)
        return f"{self.kind}:{src}[N={self.N},n={self.n},seed={self.seed}]"


@dataclass
class SuiteConfig:
    solvers: list[str]
    problems: list[ProblemSpec]
    overrides: dict = field(default_factory=dict)
    solver_overrides: dict = field(default_factory=dict)
    out: str = "."
    format: str = "csv"
    seed: int = 0
    jobs: int = 1
    timing: bool = False

    def __post_init__(self):
        if not self.solvers or not self.problems:
            raise ConfigError("need at least one solver and one problem")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be 'csv' or 'json'")
        for s in self.solvers:
            if s not in SOLVER_NAMES:
                raise ConfigError(f"unknown solver {s!r}; choose from {SOLVER_NAMES}")
        known = set(registry_names())
        for p in self.problems:
            if p.kind == "registry":
                if p.name.upper() not in known:
                    raise ConfigError(f"unknown problem {p.name!r}")
                if p.n < 1:
                    raise ConfigError(f"problem {p.name!r} needs a dimension")
            elif p.kind not in ("logistic", "sigmoid"):
                raise ConfigError(f"unknown problem kind {p.kind!r}")


def build_problem(spec: ProblemSpec, base_seed: int = 0):
    """Fresh oracle instance for one run (counters start at zero)."""
    if spec.kind == "registry":
        return get_problem(spec.name, spec.n)
    if spec.source == "synth":
        data = synth_classification(spec.N, spec.n, spec.seed + base_seed)
    else:
        data = load_libsvm(spec.source, n_features=spec.n or None)
    if spec.kind == "logistic":
        return logistic_objective(remap_labels(data, "pm1"))
    return sigmoid_objective(remap_labels(data, "01"))


def build_solver_config(solver: str, spec: ProblemSpec, overrides: dict,
                        solver_overrides: dict | None = None) -> SolverConfig:
    params = {}
    eps = EPS_REL_REGISTRY if spec.kind == "registry" else EPS_REL_CLASSIFICATION
    params["eps_rel"] = eps
    params.update(overrides or {})
    params.update((solver_overrides or {}).get(solver, {}))
    if solver == "FAR2-RK":
        params.setdefault("space_kind", RATIONAL)
    elif solver in ("FAR2-PK", "FAR2-SO", "AR2"):
        params.setdefault("space_kind", POLYNOMIAL)
    if solver == "FAR2-SO":
        return SecondOrderConfig(**params)
    params.pop("theta2", None)
    params.pop("eps_H", None)
    return SolverConfig(**params)


def _run_one(task) -> RunReport:
    solver, spec, overrides, solver_overrides, base_seed = task
    problem = build_problem(spec, base_seed)
    cfg = build_solver_config(solver, spec, overrides, solver_overrides)
    try:
        if solver == "AR2":
            report = ar2_solve(problem, cfg)
        elif solver == "FAR2-SO":
            report = far2so_solve(problem, cfg)
        else:
            report = far2_solve(problem, cfg)
    except SolverError as exc:
        report = RunReport(solver, problem.name, problem.n, "solve_failure",
                           [float(v) for v in problem.x0], math.nan, math.nan,
                           message=str(exc))
    report.problem = spec.label
    return report


def run_suite(cfg: SuiteConfig) -> list[RunReport]:
    """One RunReport per (solver, problem), in configuration order."""
    tasks = [(solver, spec, cfg.overrides, cfg.solver_overrides, cfg.seed)
             for spec in cfg.problems for solver in cfg.solvers]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            reports = list(pool.map(_run_one, tasks))
    else:
        reports = [_run_one(t) for t in tasks]
    return reports


# --- performance profiles ---------------------------------------------------

METRICS = {"n_fact": "n_fact", "n_nli": "n_nli", "fact": "n_fact", "nli": "n_nli"}


@dataclass
class ProfileTable:
    """Per-(solver, problem) cost ratios and the derived step curves."""

    metric: str
    solvers: list[str]
    problems: list[str]
    costs: dict
    ratios: dict

    def value(self, solver: str, tau: float) -> float:
        rs = [self.ratios[(solver, p)] for p in self.problems]
        return sum(1 for r in rs if r <= tau) / len(self.problems)

    def series(self, solver: str) -> list[tuple[float, float]]:
        """Breakpoints (tau, p(tau)) of the nondecreasing step curve."""
        finite = sorted({self.ratios[(solver, p)] for p in self.problems
                         if math.isfinite(self.ratios[(solver, p)])})
        taus = sorted({1.0, *finite})
        return [(t, self.value(solver, t)) for t in taus]


def performance_profile(reports: list[RunReport], metric: str = "n_fact") -> ProfileTable:
    """Dolan-More profile: per-problem cost ratios against the best solver.

    Failed runs are assigned an infinite ratio. With a zero best cost only
    solvers that also report zero cost count as matching the best.
    """
    if metric not in METRICS:
        raise ProfileError(f"metric must be one of {sorted(set(METRICS.values()))}")
    attr = METRICS[metric]
    solvers = list(dict.fromkeys(r.solver for r in reports))
    # a "problem" is one (label, dimension) instance
    problems = list(dict.fromkeys((r.problem, r.n) for r in reports))
    if len(solvers) < 2:
        raise ProfileError("profiles need at least two solvers")
    costs = {}
    for r in reports:
        costs[(r.solver, (r.problem, r.n))] = (float(getattr(r, attr))
                                               if r.converged else None)
    ratios = {}
    for p in problems:
        vals = [costs.get((s, p)) for s in solvers]
        finite = [v for v in vals if v is not None]
        best = min(finite) if finite else None
        for s in solvers:
            c = costs.get((s, p))
            if c is None or best is None:
                ratios[(s, p)] = math.inf
            elif best == 0.0:
                ratios[(s, p)] = 1.0 if c == 0.0 else math.inf
            else:
                ratios[(s, p)] = c / best
    return ProfileTable(attr, solvers, problems, costs, ratios)


# --- report serialization ---------------------------------------------------

def _csv_row(r: RunReport, timing: bool) -> str:
    wall = r.wall_s if timing else 0.0
    return ",".join([
        r.problem, str(r.n), r.solver, r.status, str(r.n_nli), str(r.n_fact),
        str(r.n_refresh), f"{r.ave_subspace_dim:.2f}", str(r.n_subspace_steps),
        str(r.n_secant_calls), f"{r.f_final:.12e}", f"{r.gnorm_final:.12e}",
        f"{wall:.3f}"])


def write_reports_csv(reports: list[RunReport], path, timing: bool = False) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for r in reports:
            fh.write(_csv_row(r, timing) + "\n")


def write_reports_json(reports: list[RunReport], path) -> None:
    payload = {"reports": [dataclasses.asdict(r) for r in reports]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_reports_json(path) -> list[RunReport]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    out = []
    for d in payload["reports"]:
        d = dict(d)
        d["trace"] = [IterationRecord(**t) for t in d.get("trace", [])]
        out.append(RunReport(**d))
    return out


def write_profile_series(table: ProfileTable, outdir) -> list[str]:
    """One two-column (tau, p) file per solver, plot-tool friendly."""
    paths = []
    for solver in table.solvers:
        fname = f"profile_{table.metric}_{solver.replace('/', '_')}.dat"
        path = os.path.join(outdir, fname)
        with open(path, "w", encoding="utf-8") as fh:
            for tau, p in table.series(solver):
                fh.write(f"{tau:.10g} {p:.10g}\n")
        paths.append(path)
    return paths


# --- config file ------------------------------------------------------------

_SUITE_KEYS = {"out", "format", "seed", "jobs", "timing"}
_FLOAT_KEYS = {"eta1", "eta2", "gamma1", "gamma2", "theta1", "theta2",
               "sigma0", "sigma_min", "c_low", "c_up", "eps_rel",
               "time_limit", "eps_h"}
_INT_KEYS = {"j_max", "max_iters"}


def _convert(key: str, value: str):
    key = key.lower()
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _INT_KEYS:
        return int(value)
    return value


def parse_config(path) -> SuiteConfig:
    """Flat sectioned key=value format: [suite], repeated [solver]/[problem]."""
    solvers: list[str] = []
    solver_overrides: dict = {}
    problems: list[ProblemSpec] = []
    suite: dict = {}
    section = None
    current: dict = {}

    def close_section():
        nonlocal current
        if section == "solver":
            name = current.pop("name", None)
            if not name:
                raise ConfigError("[solver] section without a name")
            solvers.append(name)
            if current:
                params = {("eps_H" if k == "eps_h" else k): _convert(k, v)
                          for k, v in current.items()}
                solver_overrides[name] = params
        elif section == "problem":
            kind = current.pop("kind", "registry")
            spec = ProblemSpec(
                kind=kind,
                name=current.pop("name", "").upper(),
                n=int(current.pop("n", 0) or 0),
                N=int(current.pop("N", current.pop("samples", 0)) or 0),
                seed=int(current.pop("seed", 0) or 0),
                source=current.pop("source", "synth"))
            if current:
                raise ConfigError(f"unknown problem keys: {sorted(current)}")
            problems.append(spec)
        elif section == "suite":
            suite.update(current)
        current = {}

    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                close_section()
                section = line[1:-1].strip().lower()
                if section not in ("suite", "solver", "problem"):
                    raise ConfigError(f"line {lineno}: unknown section [{section}]")
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            if section is None:
                raise ConfigError(f"line {lineno}: key outside a section")
            key, value = (t.strip() for t in line.split("=", 1))
            current[key] = value
    close_section()

    return SuiteConfig(
        solvers=solvers,
        problems=problems,
        solver_overrides=solver_overrides,
        out=suite.get("out", "."),
        format=suite.get("format", "csv"),
        seed=int(suite.get("seed", 0)),
        jobs=int(suite.get("jobs", 1)),
        timing=str(suite.get("timing", "off")).lower() in ("1", "on", "true", "yes"))


def reports_equal(a: RunReport, b: RunReport) -> bool:
    # serialized comparison: NaN-valued fields (e.g. rho on subspace-rejection
    # records) compare equal through their textual form
    da = json.dumps(dataclasses.asdict(a), sort_keys=True)
    db = json.dumps(dataclasses.asdict(b), sort_keys=True)
    return da == db


def summarize(reports: list[RunReport]) -> str:
    lines = []
    for r in reports:
        lines.append(
            f"{r.problem:>28s} n={r.n:<6d} {r.solver:<8s} {r.status:<18s} "
            f"nli={r.n_nli:<5d} fact={r.n_fact:<5d} f={r.f_final:.6e} "
            f"|g|={r.gnorm_final:.3e}")
    return "\n".join(lines)

