"""Monte Carlo lab: data generator, selection metrics, replication engine.

The generator draws an AR(1)-correlated Gaussian design (truncated at a
fixed magnitude, first column forced to one), responses that are linear
in a sparse equispaced coefficient vector with heteroskedastic noise
scaled by the second covariate, and three independent samples per
replication (train / validation / test).
"""

import csv
import io
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, check_tau, empirical_risk
from .firstorder import ProxConfig, fo_cqr, multi_start_fo
from .mio import build_milp, solve_bnb
from .qreg import l1_pqr_fit, lambda_bc, qr_fit
from .tuning import default_grid, lambda_from_c, tune

__all__ = ["DgpConfig", "MethodConfig", "MetricRow", "StudyReport",
           "true_theta", "dgp_sample", "compute_metrics", "run_study",
           "METRIC_FIELDS"]

log = logging.getLogger(__name__)

METRIC_FIELDS = ("corr_sel", "orac_sel", "num_irrel", "sparsity", "l2_error",
                 "fit_mse", "in_rr", "out_rr", "hamming")


@dataclass(frozen=True)
class DgpConfig:
    """Sampling design: sizes, sparsity, correlation, truncation, noise."""

    n: int = 100
    p: int = 10
    s: int = 5
    rho: float = 0.5
    truncation: float = 6.0
    noise_sd: float = 0.25
    n_valid: int = 100
    n_test: int = 5000
    seed: int | None = None
    support: tuple | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not 1 <= self.s <= self.p:
            raise ValueError("need 1 <= s <= p")
        if self.p < 2:
            raise ValueError("the generator needs p >= 2")


def true_theta(p, s, support=None):
    """Unit coefficients at s equispaced positions (or an explicit support)."""
    if not 1 <= s <= p:
        raise ValueError("need 1 <= s <= p")
    theta = np.zeros(p)
    if support is None:
        idx = [(i * p) // s for i in range(s)]
    else:
        idx = sorted(int(j) for j in support)
        if len(idx) != s or idx[0] < 0 or idx[-1] >= p:
            raise ValueError("support must hold s valid distinct indices")
    theta[idx] = 1.0
    return theta


def _draw_dataset(cfg, rng, n):
    p = cfg.p
    eta = rng.standard_normal((n, p - 1))
    Z = np.empty((n, p - 1))
    Z[:, 0] = eta[:, 0]
    carry = np.sqrt(1.0 - cfg.rho ** 2)
    for j in range(1, p - 1):
        Z[:, j] = cfg.rho * Z[:, j - 1] + carry * eta[:, j]
    X = np.empty((n, p))
    X[:, 0] = 1.0
    X[:, 1:] = Z * (np.abs(Z) <= cfg.truncation)
    theta_star = true_theta(p, cfg.s, cfg.support)
    y = X @ theta_star + X[:, 1] * rng.normal(0.0, cfg.noise_sd, size=n)
    return Dataset(X, y)


def dgp_sample(cfg, rng=None):
    """Independent (train, valid, test) samples from the design."""
    rng = np.random.default_rng(cfg.seed if rng is None else rng)
    train = _draw_dataset(cfg, rng, cfg.n)
    valid = _draw_dataset(cfg, rng, cfg.n_valid)
    test = _draw_dataset(cfg, rng, cfg.n_test)
    return train, valid, test


@dataclass
class MetricRow:
    """Selection and risk metrics of one fitted model in one replication."""

    corr_sel: float
    orac_sel: float
    num_irrel: int
    sparsity: int
    l2_error: float
    fit_mse: float
    in_rr: float | None
    out_rr: float | None
    hamming: float

    def as_dict(self):
        return {k: getattr(self, k) for k in METRIC_FIELDS}


def compute_metrics(theta_hat, theta_star, test, train, tau, select_tol=1e-5):
    """Score an estimate against the truth on held-out and training samples.

    A coordinate is treated as selected when its magnitude exceeds
    ``select_tol``.  Relative risks divide the estimate's check risk by
    the truth's; a zero true risk yields ``None`` for that ratio.
    """
    tau = check_tau(tau)
    theta_hat = np.asarray(theta_hat, dtype=float)
    theta_star = np.asarray(theta_star, dtype=float)
    if theta_hat.shape != theta_star.shape:
        raise ValueError("estimate and truth disagree on dimension")
    sel = np.abs(theta_hat) > select_tol
    truth = theta_star != 0.0
    s = int(np.sum(truth))
    corr_sel = float(np.sum(sel & truth) / s) if s else 1.0
    orac_sel = 1.0 if np.array_equal(sel, truth) else 0.0
    num_irrel = int(np.sum(sel & ~truth))
    diff = theta_hat - theta_star
    fit_gap = test.X @ diff

    def rel_risk(sample):
        base = empirical_risk(theta_star, sample, tau)
        if base == 0.0:
            return None
        return empirical_risk(theta_hat, sample, tau) / base

    return MetricRow(
        corr_sel=corr_sel,
        orac_sel=orac_sel,
        num_irrel=num_irrel,
        sparsity=int(np.sum(sel)),
        l2_error=float(np.linalg.norm(diff)),
        fit_mse=float(np.mean(fit_gap ** 2)),
        in_rr=rel_risk(train),
        out_rr=rel_risk(test),
        hamming=float(np.sum(np.abs(diff) > select_tol) / s) if s else 0.0,
    )


@dataclass(frozen=True)
class MethodConfig:
    """One estimator in a study: kind plus its solver settings.

    Kinds: ``l0_pqr_fo`` (multi-start first-order), ``l0_pqr_mio``
    (branch-and-bound warm-started by the first-order run), ``l0_cqr_fo``
    (cardinality-constrained first-order), ``l1_pqr``.
    """

    kind: str
    name: str = ""
    tau: float = 0.5
    k0: int = 100
    box: float = 10.0
    eps: float = 2e-4
    restarts: int = 10
    max_iter: int = 1000
    conv_tol: float = 1e-8
    select_tol: float = 1e-5
    bc_alpha: float = 0.1
    bc_draws: int = 1000
    time_limit: float = 600.0
    intercept_col: int | None = 0
    grid: object = None

    def __post_init__(self):
        if self.kind not in ("l0_pqr_fo", "l0_pqr_mio", "l0_cqr_fo", "l1_pqr"):
            raise ValueError(f"unknown method kind {self.kind!r}")
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    def prox_config(self, lam, p):
        return ProxConfig(lam=lam, k0=min(self.k0, p), box=self.box, eps=self.eps,
                          max_iter=self.max_iter, conv_tol=self.conv_tol)


def _fit_tuned(mc, train, valid, seed):
    """Tune one method on (train, valid); returns (value, FitResult, rows)."""
    p = train.p
    tau = mc.tau
    if mc.kind == "l0_cqr_fo":
        grid = mc.grid or default_grid("l0_cqr", p)

        def fitter(ds, q, tau_):
            init = None
            if ds.p < ds.n:  # warm start from the dense fit when it exists
                try:
                    init = qr_fit(ds, range(ds.p), tau_)
                except ValueError:
                    init = None
            return fo_cqr(ds, tau_, int(q), mc.prox_config(0.0, p), theta_init=init)

        value, fit, rows = tune(fitter, grid, train, valid, tau)
        return value, fit, rows

    bc_q = lambda_bc(train, tau, alpha=mc.bc_alpha, draws=mc.bc_draws, rng=seed)
    if mc.kind == "l1_pqr":
        grid = mc.grid or default_grid("l1_pqr", p)

        def fitter(ds, c, tau_):
            return l1_pqr_fit(ds, tau_, c * bc_q,
                              penalize_intercept=mc.intercept_col is None,
                              intercept_col=mc.intercept_col or 0)

        value, fit, rows = tune(fitter, grid, train, valid, tau)
        return value, fit, rows

    grid = mc.grid or default_grid("l0_pqr", p, mc.k0)

    def fitter(ds, c, tau_):
        cfg = mc.prox_config(lambda_from_c(c, ds), p)
        fit = multi_start_fo(ds, tau_, cfg, mc.restarts, c, rng_seed=seed,
                             intercept_col=mc.intercept_col, bc_quantile=bc_q)
        if mc.kind == "l0_pqr_mio":
            model = build_milp(ds, tau_, cfg.lam, cfg.cap(p), box=mc.box)
            fit = solve_bnb(model, ds, warm=fit, time_limit=mc.time_limit)
        return fit

    value, fit, rows = tune(fitter, grid, train, valid, tau)
    return value, fit, rows


def _run_replication(args):
    cfg, methods, rep, child_seed = args
    rng = np.random.default_rng(child_seed)
    train, valid, test = dgp_sample(cfg, rng)
    theta_star = true_theta(cfg.p, cfg.s, cfg.support)
    out = []
    method_seeds = child_seed.spawn(len(methods))
    for mc, mseed in zip(methods, method_seeds):
        try:
            value, fit, _ = _fit_tuned(mc, train, valid, mseed)
            row = compute_metrics(fit.theta, theta_star, test, train, mc.tau,
                                  select_tol=mc.select_tol)
            out.append((rep, mc.name, value, row, None))
        except Exception as exc:  # noqa: BLE001 - a bad rep must not sink the study
            log.warning("replication %d, method %s failed: %s", rep, mc.name, exc)
            out.append((rep, mc.name, None, None, str(exc)))
    return out


@dataclass
class StudyReport:
    """Per-replication metric rows plus aggregation helpers."""

    reps: int
    seed: int
    methods: tuple
    rows: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)

    def aggregate(self):
        """Mean of every metric per method; None relative risks are skipped."""
        agg = {}
        for name in self.methods:
            rows = [r for r in self.rows if r["method"] == name and r["metrics"]]
            entry = {"n_reps": len(rows), "n_failed": self.failures.get(name, 0)}
            for key in METRIC_FIELDS:
                vals = [r["metrics"][key] for r in rows if r["metrics"][key] is not None]
                entry[key] = float(np.mean(vals)) if vals else None
            agg[name] = entry
        return agg

    def to_csv(self, path=None):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["rep", "method", "selected", *METRIC_FIELDS])
        for row in self.rows:
            metrics = row["metrics"] or {k: "" for k in METRIC_FIELDS}
            writer.writerow([row["rep"], row["method"], row["selected"],
                             *[metrics[k] for k in METRIC_FIELDS]])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text

    def to_jsonl(self, path):
        """Raw per-replication rows, one JSON object per line."""
        import json

        with open(path, "w", encoding="utf-8") as fh:
            for row in self.rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")

    def format_table(self):
        agg = self.aggregate()
        header = f"{'method':<14}" + "".join(f"{k:>12}" for k in METRIC_FIELDS)
        lines = [header]
        for name, entry in agg.items():
            cells = "".join(
                f"{entry[k]:>12.4f}" if entry[k] is not None else f"{'na':>12}"
                for k in METRIC_FIELDS
            )
            lines.append(f"{name:<14}" + cells)
        return "\n".join(lines)


def run_study(methods, cfg, reps, seed, workers=1):
    """Replicate draw -> tune -> fit -> score for every method.

    Each replication gets an independent seed stream derived from
    ``seed``, so results do not depend on execution order or on
    ``workers``.  Failed method-replications are logged, counted and
    excluded from the aggregates.
    """
    if reps < 1:
        raise ValueError("need at least one replication")
    methods = tuple(methods)
    names = [m.name for m in methods]
    if len(set(names)) != len(names):
        raise ValueError("method names must be unique")
    child_seeds = np.random.SeedSequence(seed).spawn(reps)
    jobs = [(cfg, methods, r, child_seeds[r]) for r in range(reps)]
    t0 = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_rep = list(pool.map(_run_replication, jobs))
    else:
        per_rep = [_run_replication(job) for job in jobs]
    report = StudyReport(reps=reps, seed=seed, methods=tuple(names))
    for results in per_rep:
        for rep, name, value, row, err in results:
            if err is not None:
                report.failures[name] = report.failures.get(name, 0) + 1
            report.rows.append({
                "rep": rep,
                "method": name,
                "selected": value,
                "metrics": row.as_dict() if row is not None else None,
            })
    log.info("study of %d reps finished in %.1fs", reps, time.perf_counter() - t0)
    return report
