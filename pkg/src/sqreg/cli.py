"""Command-line surface: fit, tune, exact, simulate, conformal.

Every run emits a JSON record embedding the resolved configuration and
seeds (enough to reproduce it) plus a short human-readable summary.
Exit codes: 0 success, 2 bad usage, 3 data or file problems, 4 solver
failures, 1 anything else; failures print a JSON error record to stderr.
"""

import argparse
import json
import sys

import numpy as np

from .conformal import evaluate_coverage, fit_conformal, predict_interval
from .core import FitResult, empirical_risk, support_of
from .dataio import (DataError, dump_json, fit_result_payload, read_config,
                     read_csv)
from .firstorder import ProxConfig, fo_cqr, multi_start_fo
from .mio import build_milp, solve_bnb, solve_enumeration
from .qreg import l1_pqr_fit, lambda_bc, qr_fit
from .simplex import SolverError
from .simulation import DgpConfig, MethodConfig, run_study
from .tuning import lambda_from_c, risk_table_csv

__all__ = ["cli_main", "main"]

_METHOD_KINDS = {
    "l0pqr": "l0_pqr_fo",
    "l0pqr-mio": "l0_pqr_mio",
    "l0cqr": "l0_cqr_fo",
    "l1pqr": "l1_pqr",
}


def _add_common(sub):
    sub.add_argument("--tau", type=float, default=0.5)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", help="write the JSON record here instead of stdout")


def _add_solver_flags(sub):
    sub.add_argument("--c", type=float, default=1.0, help="penalty scale constant")
    sub.add_argument("--q", type=int, default=None, help="sparsity budget (l0cqr)")
    sub.add_argument("--k0", type=int, default=100)
    sub.add_argument("--box", type=float, default=10.0)
    sub.add_argument("--eps", type=float, default=2e-4)
    sub.add_argument("--restarts", type=int, default=10)
    sub.add_argument("--alpha", type=float, default=0.1)
    sub.add_argument("--time-limit", type=float, default=600.0)
    sub.add_argument("--intercept-col", type=int, default=None,
                     help="index of an unpenalized intercept column")


def _add_data_flags(sub):
    sub.add_argument("--data", required=True, help="input CSV path")
    sub.add_argument("--response", required=True, help="response column name")


def build_parser():
    parser = argparse.ArgumentParser(prog="sqreg",
                                     description="sparse quantile regression toolkit")
    subs = parser.add_subparsers(dest="command", required=True)

    fit = subs.add_parser("fit", help="fit one estimator at fixed tuning")
    _add_data_flags(fit)
    fit.add_argument("--method", required=True, choices=[*_METHOD_KINDS, "qr"])
    _add_common(fit)
    _add_solver_flags(fit)
    fit.set_defaults(func=_cmd_fit)

    tn = subs.add_parser("tune", help="grid search with a train/validation split")
    _add_data_flags(tn)
    tn.add_argument("--method", required=True, choices=sorted(_METHOD_KINDS))
    tn.add_argument("--valid-frac", type=float, default=0.5)
    _add_common(tn)
    _add_solver_flags(tn)
    tn.set_defaults(func=_cmd_tune)

    ex = subs.add_parser("exact", help="exact solver: branch-and-bound or enumeration")
    _add_data_flags(ex)
    ex.add_argument("--solver", choices=["bnb", "enum"], default="bnb")
    ex.add_argument("--lam", type=float, default=None,
                    help="absolute penalty level; wins over --c")
    ex.add_argument("--gap-tol", type=float, default=1e-6)
    _add_common(ex)
    _add_solver_flags(ex)
    ex.set_defaults(func=_cmd_exact)

    sim = subs.add_parser("simulate", help="run a replication study from a config file")
    sim.add_argument("--config", required=True)
    sim.add_argument("--workers", type=int, default=1)
    _add_common(sim)
    sim.set_defaults(func=_cmd_simulate)

    cf = subs.add_parser("conformal", help="split conformal prediction pipeline")
    _add_data_flags(cf)
    cf.add_argument("--method", default="l0pqr", choices=sorted(_METHOD_KINDS))
    cf.add_argument("--intervals-out", help="per-point interval CSV path")
    _add_common(cf)
    _add_solver_flags(cf)
    cf.set_defaults(func=_cmd_conformal)
    return parser


def _resolved(args, skip=("func", "command")):
    return {k: v for k, v in vars(args).items() if k not in skip}


def _fit_once(data, args):
    method = args.method
    tau = args.tau
    p = data.p
    if method == "qr":
        theta = qr_fit(data, range(p), tau)
        risk = empirical_risk(theta, data, tau)
        return FitResult(theta=theta, support=support_of(theta),
                         obj_unpenalized=risk, obj_penalized=risk,
                         iterations=0, converged=True, wall_seconds=0.0)
    cfg = ProxConfig(lam=0.0, k0=min(args.k0, p), box=args.box, eps=args.eps)
    if method == "l0cqr":
        if args.q is None:
            raise ValueError("--q is required for l0cqr")
        init = qr_fit(data, range(p), tau) if p < data.n else None
        return fo_cqr(data, tau, args.q, cfg, theta_init=init)
    if method == "l1pqr":
        level = args.c * lambda_bc(data, tau, alpha=args.alpha, rng=args.seed)
        return l1_pqr_fit(data, tau, level,
                          penalize_intercept=args.intercept_col is None,
                          intercept_col=args.intercept_col or 0)
    lam = lambda_from_c(args.c, data)
    cfg = ProxConfig(lam=lam, k0=min(args.k0, p), box=args.box, eps=args.eps)
    fit = multi_start_fo(data, tau, cfg, args.restarts, args.c, rng_seed=args.seed,
                         intercept_col=args.intercept_col, bc_alpha=args.alpha)
    if method == "l0pqr-mio":
        model = build_milp(data, tau, lam, cfg.cap(p), box=args.box)
        fit = solve_bnb(model, data, warm=fit, time_limit=args.time_limit)
    return fit


def _cmd_fit(args):
    data = read_csv(args.data, args.response)
    fit = _fit_once(data, args)
    payload = {
        "command": "fit",
        "config": _resolved(args),
        "data": {"n": data.n, "p": data.p},
        "result": fit_result_payload(fit, data.names),
    }
    summary = (f"fit[{args.method}] tau={args.tau} sparsity={len(fit.support)} "
               f"objective={fit.obj_penalized:.6g}")
    return payload, summary


def _split_indices(n, fractions, rng):
    idx = rng.permutation(n)
    counts = [int(n * f) for f in fractions]
    for i in range(n - sum(counts)):  # remainders go to the earlier parts
        counts[i % len(counts)] += 1
    parts, start = [], 0
    for cnt in counts:
        parts.append(np.sort(idx[start:start + cnt]))
        start += cnt
    return parts


def _subset(data, rows):
    from .core import Dataset

    return Dataset(data.X[rows], data.y[rows], data.names)


def _method_config(args):
    return MethodConfig(
        kind=_METHOD_KINDS[args.method],
        tau=args.tau,
        k0=args.k0,
        box=args.box,
        eps=args.eps,
        restarts=args.restarts,
        bc_alpha=args.alpha,
        time_limit=getattr(args, "time_limit", 600.0),
        intercept_col=args.intercept_col,
    )


def _cmd_tune(args):
    from .simulation import _fit_tuned

    data = read_csv(args.data, args.response)
    if not 0.0 < args.valid_frac < 1.0:
        raise ValueError("--valid-frac must lie in (0, 1)")
    rng = np.random.default_rng(args.seed)
    train_rows, valid_rows = _split_indices(data.n, [1 - args.valid_frac,
                                                     args.valid_frac], rng)
    train, valid = _subset(data, train_rows), _subset(data, valid_rows)
    mc = _method_config(args)
    value, fit, rows = _fit_tuned(mc, train, valid, np.random.SeedSequence(args.seed))
    payload = {
        "command": "tune",
        "config": _resolved(args),
        "data": {"n": data.n, "p": data.p,
                 "n_train": train.n, "n_valid": valid.n},
        "selected": value,
        "risk_table": risk_table_csv(rows),
        "result": fit_result_payload(fit, data.names),
    }
    summary = (f"tune[{args.method}] selected={value} "
               f"sparsity={len(fit.support)} objective={fit.obj_penalized:.6g}")
    return payload, summary


def _cmd_exact(args):
    data = read_csv(args.data, args.response)
    lam = args.lam if args.lam is not None else lambda_from_c(args.c, data)
    k0 = min(args.k0, data.p)
    if args.solver == "enum":
        fit = solve_enumeration(data, args.tau, lam, k0)
    else:
        warm = None
        if args.restarts > 0:
            cfg = ProxConfig(lam=lam, k0=k0, box=args.box, eps=args.eps)
            warm = multi_start_fo(data, args.tau, cfg, args.restarts, args.c,
                                  rng_seed=args.seed,
                                  intercept_col=args.intercept_col,
                                  bc_alpha=args.alpha)
        model = build_milp(data, args.tau, lam, k0, box=args.box)
        fit = solve_bnb(model, data, warm=warm, time_limit=args.time_limit,
                        gap_tol=args.gap_tol)
    payload = {
        "command": "exact",
        "config": _resolved(args),
        "lam": lam,
        "data": {"n": data.n, "p": data.p},
        "result": fit_result_payload(fit, data.names),
    }
    summary = (f"exact[{args.solver}] lam={lam:.6g} sparsity={len(fit.support)} "
               f"objective={fit.obj_penalized:.6g} gap={fit.gap}")
    return payload, summary


def _int_or(cfgmap, key, default):
    return int(cfgmap[key]) if key in cfgmap else default


def _float_or(cfgmap, key, default):
    return float(cfgmap[key]) if key in cfgmap else default


def _cmd_simulate(args):
    cfgmap = read_config(args.config)
    dgp = DgpConfig(
        n=_int_or(cfgmap, "n", 100),
        p=_int_or(cfgmap, "p", 10),
        s=_int_or(cfgmap, "s", 5),
        rho=_float_or(cfgmap, "rho", 0.5),
        truncation=_float_or(cfgmap, "truncation", 6.0),
        noise_sd=_float_or(cfgmap, "noise_sd", 0.25),
        n_valid=_int_or(cfgmap, "n_valid", 100),
        n_test=_int_or(cfgmap, "n_test", 5000),
    )
    kinds = [k.strip() for k in cfgmap.get("methods", "l0_pqr_fo").split(",") if k.strip()]
    methods = [
        MethodConfig(
            kind=kind,
            tau=_float_or(cfgmap, "tau", 0.5),
            k0=_int_or(cfgmap, "k0", 100),
            restarts=_int_or(cfgmap, "restarts", 10),
            eps=_float_or(cfgmap, "eps", 2e-4),
            box=_float_or(cfgmap, "box", 10.0),
            time_limit=_float_or(cfgmap, "time_limit", 600.0),
        )
        for kind in kinds
    ]
    reps = _int_or(cfgmap, "reps", 10)
    seed = _int_or(cfgmap, "seed", args.seed)
    report = run_study(methods, dgp, reps, seed, workers=max(1, args.workers))
    stem = args.out or "study"
    csv_path = stem + ".csv"
    report.to_csv(csv_path)
    if cfgmap.get("jsonl", "") in ("1", "true", "yes"):
        report.to_jsonl(stem + ".jsonl")
    args.out = stem + ".json"
    payload = {
        "command": "simulate",
        "config": {**_resolved(args), "resolved": cfgmap},
        "seed": seed,
        "aggregate": report.aggregate(),
        "csv": csv_path,
    }
    return payload, report.format_table()


def _cmd_conformal(args):
    from dataclasses import replace

    from .simulation import _fit_tuned

    data = read_csv(args.data, args.response)
    rng = np.random.default_rng(args.seed)
    parts = _split_indices(data.n, [0.25, 0.25, 0.25, 0.25], rng)
    train, valid, calib, test = (_subset(data, rows) for rows in parts)
    mc = _method_config(args)

    def fitter(ds, tau):
        _, fit, _ = _fit_tuned(replace(mc, tau=tau), ds, valid,
                               np.random.SeedSequence(args.seed))
        return fit.theta

    model = fit_conformal(train, calib, args.alpha, fitter)
    report = evaluate_coverage(model, test)
    if args.intervals_out:
        import csv as _csv

        with open(args.intervals_out, "w", encoding="utf-8", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["lower", "upper", "covered"])
            for i in range(test.n):
                iv = predict_interval(model, test.X[i])
                writer.writerow([iv.lower, iv.upper,
                                 int(iv.lower <= test.y[i] <= iv.upper)])
    payload = {
        "command": "conformal",
        "config": _resolved(args),
        "split_sizes": [len(p_) for p_ in parts],
        "correction": model.correction,
        "coverage": report.coverage,
        "mean_length": report.mean_length,
        "n_infinite": report.n_infinite,
        "n_crossing": report.n_crossing,
        "sparsity": {"lower": len(support_of(model.theta_lo, 1e-5)),
                     "upper": len(support_of(model.theta_hi, 1e-5))},
    }
    summary = (f"conformal[{args.method}] alpha={args.alpha} "
               f"coverage={report.coverage:.3f} length={report.mean_length:.4g}")
    return payload, summary


def _emit_error(kind, exc, code):
    record = {"error": {"kind": kind, "message": str(exc), "exit_code": code}}
    print(json.dumps(record), file=sys.stderr)
    return code


def cli_main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        payload, summary = args.func(args)
    except DataError as exc:
        return _emit_error("data", exc, 3)
    except OSError as exc:
        return _emit_error("file", exc, 3)
    except SolverError as exc:
        return _emit_error("solver", exc, 4)
    except ValueError as exc:
        return _emit_error("input", exc, 3)
    except Exception as exc:  # noqa: BLE001 - the CLI must not traceback
        return _emit_error("internal", exc, 1)
    print(summary)
    if args.out:
        dump_json(payload, args.out)
    else:
        print(dump_json(payload))
    return 0


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
