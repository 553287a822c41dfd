"""Command-line entry point: ``palign <command> ...``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 resource error.
"""

import argparse
import json
import sys

from . import harness
from . import thresholds as th
from .cumulants import verify_kappa_chain
from .estimators import ResourceError, branch_and_bound_align, brute_force_align, penalized_align
from .models import DomainError, ModelParams, instance_from_json, instance_to_json, sample_instance

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


def _write(text, out):
    if out is None or out == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {out}: {exc}") from exc


def _model_args(sp):
    sp.add_argument("--model", required=True, choices=["ER", "Gaussian"])
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=float)


def cmd_sample(a):
    params = ModelParams(n=a.n, m=a.m, rho=a.rho, model=a.model, p=a.p)
    _write(instance_to_json(sample_instance(params, a.seed)), a.out)
    return EXIT_OK


def cmd_align(a):
    with open(a.instance, encoding="utf-8") as fh:
        inst = instance_from_json(fh.read())
    m = inst.params.m if a.m is None else a.m
    rho = inst.params.rho if a.score in ("MleGauss", "mle") else None
    if a.method == "brute":
        res = brute_force_align(inst.g1, inst.g2, m, a.score, rho, a.budget, inst.truth)
    elif a.method == "penalized":
        res = penalized_align(inst.g1, inst.g2, a.penalty, a.score, rho, budget=a.budget, truth=inst.truth)
    else:
        res = branch_and_bound_align(inst.g1, inst.g2, m, a.score, rho, a.budget, inst.truth)
    _write(json.dumps(res.to_dict()), a.out)
    return EXIT_OK


def _config(a):
    if a.config:
        cfg = harness.SweepConfig.from_json(a.config)
    else:
        if a.model is None or a.n is None or a.rho is None or a.m is None:
            raise DomainError("give --config or all of --model, --n, --m, --rho")
        cfg = harness.SweepConfig(model=a.model, n=a.n, m=a.m, rho=a.rho, p=a.p or [None],
                                  score=a.score, trials=a.trials, delta=a.delta)
    if a.seed is not None:
        cfg.master_seed = a.seed
    if a.jobs is not None:
        cfg.jobs = a.jobs
    return cfg


def cmd_sweep(a):
    rows = harness.sweep(_config(a))
    _write(harness.emit(rows, a.format), a.out)
    return EXIT_OK


def cmd_phase(a):
    cfg = _config(a)
    rows = harness.sweep(cfg)
    _write(harness.emit(rows, a.format), a.out)
    cross = harness.crossing_m(rows, a.rate)
    report = {"crossings": {repr(k): (None if v == float("inf") else v) for k, v in cross.items()},
              "nonincreasing": harness.is_nonincreasing(cross)}
    sys.stderr.write(json.dumps(report) + "\n")
    return EXIT_OK


def cmd_thresholds(a):
    rep = th.threshold_report(a.model, a.n, a.rho, a.p, a.m, a.delta, a.c0, a.c2)
    _write(json.dumps(rep.to_dict(), indent=1), a.out)
    return EXIT_OK


def cmd_phase_diagram(a):
    grid = harness.phase_diagram_grid(a.steps)
    _write(harness.rows_to_csv(grid), a.out)
    return EXIT_OK


def cmd_verify_cumulants(a):
    chain = verify_kappa_chain(max_ell=a.max_ell)
    ok, worst = harness.verify_er_closed_forms()
    rep = harness.VerifyReport()
    rep.add("kappa_chain", chain.ok, f"{chain.checked} inequalities, min slack {chain.min_slack:.3g}")
    rep.add("er_closed_forms", ok, f"max relative error {worst:.3g}")
    _write(rep.to_json(), a.out)
    return EXIT_OK if rep.ok else EXIT_VERIFY


def cmd_verify_all(a):
    rep = harness.verify_all(seed=a.seed or 0, faults=a.inject_fault or ())
    _write(rep.to_json(), a.out)
    return rep.exit_status


def build_parser():
    ap = argparse.ArgumentParser(prog="palign", description="Partially correlated graph alignment experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, fmt=False):
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--seed", type=int)
        if fmt:
            sp.add_argument("--format", default="csv", choices=["csv", "json", "svg"])

    sp = sub.add_parser("sample", help="draw a planted instance as JSON")
    _model_args(sp)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--rho", type=float, required=True)
    common(sp)
    sp.set_defaults(func=cmd_sample, seed=0)

    sp = sub.add_parser("align", help="align an instance file")
    sp.add_argument("instance")
    sp.add_argument("--score", default="Product")
    sp.add_argument("--m", type=int)
    sp.add_argument("--method", default="bnb", choices=["bnb", "brute", "penalized"])
    sp.add_argument("--penalty", type=float, default=0.0)
    sp.add_argument("--budget", type=float)
    common(sp)
    sp.set_defaults(func=cmd_align)

    for name, func, helptext in (("sweep", cmd_sweep, "recovery rates over a grid"),
                                 ("phase", cmd_phase, "phase-transition table and crossings")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", help="JSON sweep configuration")
        sp.add_argument("--model", choices=["ER", "Gaussian"])
        sp.add_argument("--n", type=int, nargs="+")
        sp.add_argument("--m", type=int, nargs="+")
        sp.add_argument("--p", type=float, nargs="+")
        sp.add_argument("--rho", type=float, nargs="+")
        sp.add_argument("--score")
        sp.add_argument("--trials", type=int, default=100)
        sp.add_argument("--delta", type=float, default=0.5)
        sp.add_argument("--jobs", type=int)
        if name == "phase":
            sp.add_argument("--rate", default="exact_rate", choices=["exact_rate", "partial_rate"])
        common(sp, fmt=True)
        sp.set_defaults(func=func)

    sp = sub.add_parser("thresholds", help="threshold report as JSON")
    _model_args(sp)
    sp.add_argument("--m", type=int)
    sp.add_argument("--rho", type=float, required=True)
    sp.add_argument("--delta", type=float, default=0.5)
    sp.add_argument("--c0", type=float, default=1.0)
    sp.add_argument("--c2", type=float)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_thresholds)

    sp = sub.add_parser("phase-diagram", help="ER exponent map as CSV")
    sp.add_argument("--steps", type=int, default=19)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_phase_diagram)

    sp = sub.add_parser("verify-cumulants", help="closed forms and the cumulant chain")
    sp.add_argument("--max-ell", type=int, default=8)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify_cumulants)

    sp = sub.add_parser("verify-all", help="every verification check")
    sp.add_argument("--inject-fault", action="append", choices=["kc2"])
    common(sp)
    sp.set_defaults(func=cmd_verify_all)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "budget", None) is not None:
        args.budget = int(args.budget)
    try:
        return args.func(args)
    except ResourceError as exc:
        sys.stderr.write(f"palign: {exc}\n")
        return EXIT_RESOURCE
    except (DomainError, OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"palign: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
