"""Batch front end: load a config, run the named suite, write reports.

Outputs per run: <out>/<output>.csv (fixed columns, versioned header
comment), <out>/<output>_summary.txt (one verdict line per check), and with
--dump-fields on pde runs, <out>/<output>_fields.csv.  Exit status: 0 all
hard checks pass, 1 a hard check failed, 2 config rejected, 3 a size cap
tripped.  Reruns with the same seed produce byte-identical CSV.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import cltlab, functionals, pde, suites
from .config import ExperimentConfig, build_family, load_config
from .errors import ConfigError, DomainError, ResourceCapError
from .gfunc import SigmaInterval
from .reporting import ExperimentReport, write_rows_csv

DEFAULT_TOLERANCE = 1e-10


def run_axioms(cfg: ExperimentConfig, rng, jobs: int) -> ExperimentReport:
    p = cfg.params
    trials = p.get("trials", 1000)
    pairs = p.get("pairs", 10)
    tol = p.get("tolerance", DEFAULT_TOLERANCE)
    rows, worst = suites.axiom_suite(rng, trials, pairs)
    report = ExperimentReport("axioms", ("case", "law", "violation"),
                              provenance={"seed": cfg.seed, "trials": trials,
                                          "pairs": pairs})
    report.rows = rows
    report.add_verdict("max_violation", worst <= tol, worst, f"tolerance {tol:g}")
    return report


def run_tree_laws(cfg: ExperimentConfig, rng, jobs: int) -> ExperimentReport:
    p = cfg.params
    trees = p.get("trees", 100)
    tol = p.get("tolerance", DEFAULT_TOLERANCE)
    rows, worst = suites.tree_law_suite(rng, trees, p.get("max_depth", 6),
                                        p.get("max_children", 4),
                                        p.get("max_members", 3))
    report = ExperimentReport("tree-laws", ("tree", "law", "violation"),
                              provenance={"seed": cfg.seed, "trees": trees})
    report.rows = rows
    report.add_verdict("max_violation", worst <= tol, worst, f"tolerance {tol:g}")
    return report


def run_g_laws(cfg: ExperimentConfig, rng, jobs: int) -> ExperimentReport:
    p = cfg.params
    trials = p.get("trials", 1000)
    tol = p.get("tolerance", DEFAULT_TOLERANCE)
    rows, worst = suites.g_law_suite(rng, trials)
    report = ExperimentReport("g-laws", ("case", "law", "violation"),
                              provenance={"seed": cfg.seed, "trials": trials})
    report.rows = rows
    report.add_verdict("max_violation", worst <= tol, worst, f"tolerance {tol:g}")
    return report


def run_rosenthal(cfg: ExperimentConfig, rng, jobs: int) -> ExperimentReport:
    p = cfg.params
    trees = p.get("trees", 100)
    rows, failures, worst_ratio = suites.rosenthal_suite(
        rng, trees, p.get("p", 2.0), p.get("max_depth", 5))
    report = ExperimentReport(
        "rosenthal",
        ("tree", "first_lhs", "first_rhs", "first_pass", "second_lhs", "second_ratio"),
        provenance={"seed": cfg.seed, "trees": trees, "p": p.get("p", 2.0)})
    report.rows = rows
    report.add_verdict("failures", failures == 0, float(failures))
    report.add_verdict("ratio_finite", bool(np.isfinite(worst_ratio)), worst_ratio)
    return report


def run_pde(cfg: ExperimentConfig, rng, jobs: int,
            dump_fields: bool = False, out_dir: str = ".") -> ExperimentReport:
    from .gfunc import GFunction

    p = cfg.params
    if "theta" in p:
        interval = GFunction.from_matrices([np.asarray(m, dtype=float)
                                            for m in p["theta"]])
        generator_label = "theta[" + "/".join(repr(float(m[0][0]))
                                              for m in p["theta"]) + "]"
    else:
        lo, hi = p["sigma_interval"]
        interval = SigmaInterval(lo, hi)
        generator_label = f"{lo}/{hi}"
    horizon = p.get("horizon", 1.0)
    accuracy = p.get("accuracy", "default")
    report = ExperimentReport(
        "pde", ("functional", "value", "reference", "gap", "error_bar", "h", "margin"),
        provenance={"seed": cfg.seed, "accuracy": accuracy,
                    "generator": generator_label, "horizon": horizon})

    def solve(case):
        phi = functionals.get(case["functional"])
        return pde.gnormal_expect(interval, phi, horizon=horizon, accuracy=accuracy)

    cases = p["cases"]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            estimates = list(pool.map(solve, cases))
    else:
        estimates = [solve(case) for case in cases]
    for case, est in zip(cases, estimates):
        gap = abs(est.value - case["reference"])
        report.add_row(functional=case["functional"], value=est.value,
                       reference=case["reference"], gap=gap, error_bar=est.error_bar,
                       h=est.spacing, margin=est.margin)
        report.add_verdict(f"gap[{case['functional']}]", gap <= case["tolerance"], gap,
                           f"tolerance {case['tolerance']:g}")
        report.add_verdict(f"bar_brackets[{case['functional']}]",
                           est.error_bar >= gap, est.error_bar - gap)
    if dump_fields:
        phi = functionals.get(cases[0]["functional"])
        G = pde._as_gfunction(interval)
        half = pde._auto_half_width(G, horizon)
        grid = pde.Grid.build(1, half, half / 60, horizon, G.sigma_sq_max)
        field, snaps = pde.solve_gheat(G, phi, grid, snapshot_count=4)
        rows = pde.fields_rows(field, snaps, horizon)
        write_rows_csv(os.path.join(out_dir, f"{cfg.output}_fields.csv"),
                       "pde-fields", ("time", "x", "y", "value"), rows)
    return report


def run_clt(cfg: ExperimentConfig, rng, jobs: int) -> ExperimentReport:
    p = cfg.params
    family = build_family(p["family"])
    spec = cltlab.ArraySpec("iid", (family,), tuple(p["schedule"]))
    phis = [functionals.get(name) for name in p["functionals"]]
    report = cltlab.run_clt_experiment(
        spec, phis, accuracy=p.get("accuracy", "default"),
        gap_tolerance=p.get("tolerance"), max_nodes=p.get("max_nodes"))
    report.provenance["seed"] = cfg.seed
    return report


def run_fdd(cfg: ExperimentConfig, rng, jobs: int) -> ExperimentReport:
    p = cfg.params
    family = build_family(p["family"])
    spec = cltlab.ArraySpec("iid", (family,), tuple(p["schedule"]))
    psi = functionals.get_pair(p["functional"])
    report = cltlab.run_fdd_experiment(spec, p["times"], psi,
                                       accuracy=p.get("accuracy", "default"),
                                       gap_tolerance=p.get("tolerance"))
    report.provenance["seed"] = cfg.seed
    return report


def run_iid_conditions(cfg: ExperimentConfig, rng, jobs: int) -> ExperimentReport:
    p = cfg.params
    family = build_family(p["family"])
    tol = p.get("tolerance", 0.02)
    block = cltlab.check_iid_necessary_conditions(family, p["c_schedule"],
                                                  p["x_schedule"])
    report = ExperimentReport(
        "iid-conditions", ("condition", "probe", "level", "value"),
        provenance={"seed": cfg.seed})
    for c, v in block.rows_second_moment:
        report.add_row(condition="capped_second_moment", probe="", level=c, value=v)
    for x, v in block.rows_tail:
        report.add_row(condition="scaled_tail", probe="", level=x, value=v)
    for c, v in block.rows_trunc_mean:
        report.add_row(condition="truncated_means", probe="", level=c, value=v)
    for pi, c, v in block.rows_quadratic:
        report.add_row(condition="truncated_quadratic", probe=pi, level=c, value=v)
    report.add_verdict("quadratic_stabilized", block.stabilized,
                       1.0 if block.stabilized else 0.0)
    sm = [v for _, v in block.rows_second_moment]
    report.add_verdict("second_moment_stabilized",
                       abs(sm[-1] - sm[-2]) <= 1e-12 if len(sm) > 1 else True,
                       abs(sm[-1] - sm[-2]) if len(sm) > 1 else 0.0)
    n_est = p.get("estimate_n", 256)
    spec = cltlab.ArraySpec("iid", (family,), (n_est,))
    from .gfunc import g_eval
    c_big = p["c_schedule"][-1]
    for name, A in (("plus", np.array([[1.0]])), ("minus", np.array([[-1.0]]))):
        est = cltlab.estimate_limit_G(spec, A, c_big, n_est)
        ref = g_eval(block.induced, A)
        report.add_row(condition=f"estimate_{name}", probe=name, level=float(n_est),
                       value=est)
        report.add_verdict(f"estimate_gap[{name}]", abs(est - ref) <= tol,
                           abs(est - ref), f"reference {ref!r}")
    return report


RUNNERS = {
    "axioms": run_axioms,
    "tree-laws": run_tree_laws,
    "g-laws": run_g_laws,
    "pde": run_pde,
    "clt": run_clt,
    "fdd": run_fdd,
    "rosenthal": run_rosenthal,
    "iid-conditions": run_iid_conditions,
}


def run_config(cfg: ExperimentConfig, out_dir: str, jobs: int = 1,
               dump_fields: bool = False) -> ExperimentReport:
    rng = np.random.default_rng(cfg.seed)
    runner = RUNNERS[cfg.kind]
    if cfg.kind == "pde":
        report = runner(cfg, rng, jobs, dump_fields=dump_fields, out_dir=out_dir)
    else:
        report = runner(cfg, rng, jobs)
    report.to_csv(os.path.join(out_dir, f"{cfg.output}.csv"))
    report.write_summary(os.path.join(out_dir, f"{cfg.output}_summary.txt"))
    return report


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gexpect",
        description="Run one experiment config and write CSV + summary reports.")
    parser.add_argument("--config", required=True, help="path to a YAML config")
    parser.add_argument("--out", default="reports", help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--jobs", type=int, default=1,
                        help="worker threads for independent cells")
    parser.add_argument("--dump-fields", action="store_true",
                        help="write PDE snapshots (pde kind only)")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = ExperimentConfig(cfg.kind, args.seed, cfg.output, cfg.params)
    except ConfigError as exc:
        print(f"config rejected at {exc.path}: {exc.message}", file=sys.stderr)
        return 2

    try:
        report = run_config(cfg, args.out, jobs=max(1, args.jobs),
                            dump_fields=args.dump_fields)
    except ResourceCapError as exc:
        print(f"size cap exceeded: {exc}", file=sys.stderr)
        return 3
    except DomainError as exc:
        print(f"config rejected: {exc}", file=sys.stderr)
        return 2

    print(report.verdict_line())
    return 0 if report.hard_pass else 1


if __name__ == "__main__":
    sys.exit(main())
