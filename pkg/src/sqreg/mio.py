"""Exact l0 quantile regression: MILP build, branch-and-bound, enumeration.

The penalized problem is written as a mixed-integer LP with residual
split variables and one binary selector per covariate.  ``solve_bnb``
runs a deterministic best-first branch-and-bound on the selectors using
the dense simplex for node relaxations; ``solve_enumeration`` and
``solve_cqr_exact`` grind through all supports and serve as oracles at
desk scale.
"""

import heapq
import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .core import FitResult, check_tau, empirical_risk, support_of
from .qreg import qr_fit
from .simplex import LinearProgram, SolverError, solve_lp

__all__ = [
    "MilpModel",
    "build_milp",
    "solve_bnb",
    "solve_enumeration",
    "solve_cqr_exact",
    "write_lp_file",
]

_DUST = 1e-9


@dataclass(frozen=True)
class MilpModel:
    """Explicit MILP data with columns ordered [theta (p), r (n), s (n), d (p)].

    Structural rows: n residual-split equalities, p upper and p lower
    selector links, one cardinality row.  ``binary`` marks the selector
    block.
    """

    obj: np.ndarray
    A: np.ndarray
    senses: tuple
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    binary: np.ndarray
    n: int
    p: int
    tau: float
    lam: float
    k0: int

    @property
    def n_continuous(self):
        return self.p + 2 * self.n

    @property
    def n_binary(self):
        return self.p

    @property
    def n_structural(self):
        return self.A.shape[0]


def build_milp(data, tau, lam, k0, box=10.0):
    """Assemble the MILP whose optimum solves the l0-penalized fit.

    Selector logic: ``theta_lower_j d_j <= theta_j <= theta_upper_j d_j``
    forces ``theta_j = 0`` whenever ``d_j = 0``, so ``sum_j d_j`` counts
    the active coefficients; ``sum_j d_j <= k0`` caps them.  The box is
    symmetric: bounds are ``+-box``.
    """
    tau = check_tau(tau)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    n, p = data.n, data.p
    if not 0 <= k0 <= p:
        raise ValueError("k0 must lie in [0, p]")
    if box <= 0 or not np.isfinite(box):
        raise ValueError("box must be positive and finite")
    upper = np.full(p, float(box))
    lower = -upper
    nvar = p + 2 * n + p
    obj = np.concatenate([
        np.zeros(p), np.full(n, tau / n), np.full(n, (1.0 - tau) / n), np.full(p, lam),
    ])
    rows = n + 2 * p + 1
    A = np.zeros((rows, nvar))
    rhs = np.zeros(rows)
    senses = []
    # residual split: X theta + r - s = y
    A[:n, :p] = data.X
    A[:n, p:p + n] = np.eye(n)
    A[:n, p + n:p + 2 * n] = -np.eye(n)
    rhs[:n] = data.y
    senses += ["="] * n
    # theta_j - upper_j d_j <= 0
    for j in range(p):
        A[n + j, j] = 1.0
        A[n + j, p + 2 * n + j] = -upper[j]
    senses += ["<"] * p
    # -theta_j + lower_j d_j <= 0
    for j in range(p):
        A[n + p + j, j] = -1.0
        A[n + p + j, p + 2 * n + j] = lower[j]
    senses += ["<"] * p
    # cardinality
    A[n + 2 * p, p + 2 * n:] = 1.0
    rhs[n + 2 * p] = float(k0)
    senses += ["<"]
    lb = np.concatenate([lower, np.zeros(2 * n), np.zeros(p)])
    ub = np.concatenate([upper, np.full(2 * n, np.inf), np.ones(p)])
    binary = np.zeros(nvar, dtype=bool)
    binary[p + 2 * n:] = True
    return MilpModel(obj=obj, A=A, senses=tuple(senses), rhs=rhs, lb=lb, ub=ub,
                     binary=binary, n=n, p=p, tau=tau, lam=float(lam), k0=int(k0))


def _relaxation(model, fix0, fix1):
    lb = model.lb.copy()
    ub = model.ub.copy()
    off = model.p + 2 * model.n
    for j in fix0:
        ub[off + j] = 0.0
    for j in fix1:
        lb[off + j] = 1.0
    return LinearProgram(c=model.obj, A=model.A, senses=model.senses, b=model.rhs,
                         lb=lb, ub=ub)


def _exact_objective(model, data, theta):
    theta = theta.copy()
    theta[np.abs(theta) <= _DUST] = 0.0
    support = support_of(theta)
    risk = empirical_risk(theta, data, model.tau)
    return theta, support, risk, risk + model.lam * len(support)


def solve_bnb(model, data, warm=None, time_limit=600.0, gap_tol=1e-6,
              integrality_tol=1e-6):
    """Best-first branch-and-bound on the selector block.

    ``warm`` (a FitResult or coefficient vector) seeds the incumbent, so
    the returned objective never exceeds the warm start's.  On a normal
    exit the proven gap is at most ``gap_tol``; hitting ``time_limit``
    returns the best incumbent with the gap reported and
    ``converged=False``.
    """
    t0 = time.perf_counter()
    p = model.p
    off = p + 2 * model.n

    def make_incumbent(theta):
        theta = _project_box_cap(theta, model)
        return _exact_objective(model, data, theta)

    if warm is None:
        inc_theta, inc_support, inc_risk, inc_obj = make_incumbent(np.zeros(p))
    else:
        theta_w = warm.theta if isinstance(warm, FitResult) else np.asarray(warm, float)
        inc_theta, inc_support, inc_risk, inc_obj = make_incumbent(theta_w)

    counter = itertools.count()
    heap = []
    root = solve_lp(_relaxation(model, frozenset(), frozenset()))
    nodes = 1
    if root.status != "optimal":
        raise SolverError(f"root relaxation ended with status {root.status}")
    heapq.heappush(heap, (root.objective, next(counter), frozenset(), frozenset(), root.x))
    lower_bound = root.objective
    timed_out = False

    while heap:
        bound, _, fix0, fix1, x = heapq.heappop(heap)
        lower_bound = bound
        if inc_obj - bound <= gap_tol:
            break
        if time.perf_counter() - t0 > time_limit:
            timed_out = True
            break
        d = x[off:]
        frac = np.minimum(d, 1.0 - d)
        j = int(np.argmax(frac))
        if frac[j] <= integrality_tol:
            # integral relaxation: candidate incumbent
            theta, support, risk, obj = _exact_objective(model, data, x[:p].copy())
            obj_node = risk + model.lam * float(np.sum(d > 0.5))
            if obj_node < bound - 1e-6:
                raise RuntimeError("node relaxation was not a valid lower bound")
            if obj < inc_obj:
                inc_theta, inc_support, inc_risk, inc_obj = theta, support, risk, obj
            continue
        for child_fix0, child_fix1 in (
            (fix0 | {j}, fix1),
            (fix0, fix1 | {j}),
        ):
            sol = solve_lp(_relaxation(model, child_fix0, child_fix1))
            nodes += 1
            if sol.status != "optimal":
                continue
            if sol.objective >= inc_obj - 1e-12:
                continue  # nothing strictly better in this subtree
            heapq.heappush(heap, (sol.objective, next(counter), child_fix0,
                                  child_fix1, sol.x))

    if not heap and not timed_out:
        lower_bound = inc_obj  # tree exhausted: optimum proven
    gap = max(0.0, inc_obj - lower_bound)
    return FitResult(
        theta=inc_theta,
        support=inc_support,
        obj_unpenalized=inc_risk,
        obj_penalized=inc_obj,
        iterations=nodes,
        converged=not timed_out,
        wall_seconds=time.perf_counter() - t0,
        gap=gap,
    )


def _project_box_cap(theta, model):
    theta = np.clip(np.asarray(theta, dtype=float), model.lb[:model.p], model.ub[:model.p])
    if np.count_nonzero(theta) > model.k0:
        order = np.argsort(-np.abs(theta), kind="stable")
        theta = theta.copy()
        theta[order[model.k0:]] = 0.0
    return theta


def _count_subsets(p, k0):
    return sum(math.comb(p, j) for j in range(0, k0 + 1))


def solve_enumeration(data, tau, lam, k0, cap=200_000):
    """Exact l0-penalized fit by scoring every support of size <= k0.

    Supports are visited by increasing size, lexicographically within a
    size, and the incumbent is replaced only on a strict improvement,
    so ties resolve to the smaller, earlier support.  Raises when the
    subset count exceeds ``cap``.
    """
    t0 = time.perf_counter()
    tau = check_tau(tau)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if not 0 <= k0 <= data.p:
        raise ValueError("k0 must lie in [0, p]")
    total = _count_subsets(data.p, k0)
    if total > cap:
        raise ValueError(f"enumeration would visit {total} subsets, above the cap {cap}")
    best_theta = np.zeros(data.p)
    best_risk = empirical_risk(best_theta, data, tau)
    best_obj = best_risk
    for size in range(1, k0 + 1):
        for subset in itertools.combinations(range(data.p), size):
            try:
                theta = qr_fit(data, subset, tau)
            except ValueError:
                continue  # rank-deficient restriction: no usable fit
            theta[np.abs(theta) <= _DUST] = 0.0
            risk = empirical_risk(theta, data, tau)
            obj = risk + lam * np.count_nonzero(theta)
            if obj < best_obj - 1e-12:
                best_theta, best_risk, best_obj = theta, risk, obj
    support = support_of(best_theta)
    return FitResult(
        theta=best_theta,
        support=support,
        obj_unpenalized=best_risk,
        obj_penalized=best_risk + lam * len(support),
        iterations=total,
        converged=True,
        wall_seconds=time.perf_counter() - t0,
        gap=0.0,
    )


def solve_cqr_exact(data, tau, q, cap=200_000):
    """Exact cardinality-constrained fit: enumeration with no penalty."""
    fit = solve_enumeration(data, tau, 0.0, q, cap=cap)
    return fit


def write_lp_file(model, path):
    """Dump the MILP in LP text format for cross-checks with other solvers."""
    names = ([f"theta{j + 1}" for j in range(model.p)]
             + [f"r{i + 1}" for i in range(model.n)]
             + [f"s{i + 1}" for i in range(model.n)]
             + [f"d{j + 1}" for j in range(model.p)])

    def term(coef, name, first):
        if coef == 0:
            return ""
        sign = "" if (first and coef > 0) else ("+ " if coef > 0 else "- ")
        return f" {sign}{abs(coef):.12g} {name}"

    lines = ["\\ l0-penalized quantile regression", "Minimize", " obj:"]
    first = True
    chunk = ""
    for k, coef in enumerate(model.obj):
        piece = term(coef, names[k], first)
        if piece:
            first = False
            chunk += piece
            if len(chunk) > 200:
                lines.append(chunk)
                chunk = ""
    if chunk:
        lines.append(chunk)
    lines.append("Subject To")
    sense_txt = {"<": "<=", "=": "=", ">": ">="}
    for i in range(model.A.shape[0]):
        row = model.A[i]
        first = True
        body = ""
        for k in np.flatnonzero(row):
            body += term(row[k], names[k], first)
            first = False
        lines.append(f" c{i + 1}:{body} {sense_txt[model.senses[i]]} {model.rhs[i]:.12g}")
    lines.append("Bounds")
    for k, name in enumerate(names):
        lo, hi = model.lb[k], model.ub[k]
        if np.isinf(hi):
            lines.append(f" {lo:.12g} <= {name}")
        else:
            lines.append(f" {lo:.12g} <= {name} <= {hi:.12g}")
    lines.append("Binaries")
    lines.append(" " + " ".join(n for n, b in zip(names, model.binary) if b))
    lines.append("End")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
