"""Quantile regression fits solved through the LP engine.

``qr_fit`` is the classic linear-programming form of quantile regression
on a fixed support.  ``l1_pqr_fit`` adds a scale-standardized l1 penalty
whose level is calibrated by simulating the pivotal score statistic in
``lambda_bc``.
"""

import time

import numpy as np

from .core import FitResult, check_tau, empirical_risk, support_of
from .simplex import LinearProgram, SolverError, solve_lp

__all__ = ["qr_fit", "l1_pqr_fit", "lambda_bc"]

_DUST = 1e-9


def qr_fit(data, support, tau):
    """Check-loss fit restricted to ``support``; zeros elsewhere.

    Parameters
    ----------
    data : Dataset
    support : sequence of int
        Nonempty column indices; the restricted design must have full
        column rank.
    tau : float

    Returns
    -------
    ndarray, shape (p,)
        Coefficient vector supported on ``support``.
    """
    tau = check_tau(tau)
    support = sorted(set(int(j) for j in support))
    if not support:
        raise ValueError("support must be nonempty")
    if support[0] < 0 or support[-1] >= data.p:
        raise ValueError("support index out of range")
    Xs = data.X[:, support]
    k = len(support)
    if np.linalg.matrix_rank(Xs) < k:
        raise ValueError("restricted design is rank deficient")
    n = data.n
    # variables: [beta (free), r (>=0), s (>=0)]
    c = np.concatenate([np.zeros(k), np.full(n, tau / n), np.full(n, (1.0 - tau) / n)])
    A = np.hstack([Xs, np.eye(n), -np.eye(n)])
    lb = np.concatenate([np.full(k, -np.inf), np.zeros(2 * n)])
    ub = np.full(k + 2 * n, np.inf)
    lp = LinearProgram(c=c, A=A, senses=("=",) * n, b=data.y, lb=lb, ub=ub)
    sol = solve_lp(lp)
    if sol.status != "optimal":
        raise SolverError(f"quantile regression LP ended with status {sol.status}")
    theta = np.zeros(data.p)
    theta[support] = sol.x[:k]
    return theta


def l1_pqr_fit(data, tau, lambda_bc_value, penalize_intercept=True, intercept_col=0,
               box=None):
    """Weighted-l1-penalized quantile regression solved as one LP.

    Minimizes ``mean check loss + (lambda_bc_value / n) * sum_j sigma_j |theta_j|``
    with ``sigma_j = sqrt(mean x_ij^2)``.  When ``penalize_intercept`` is
    False the column ``intercept_col`` carries no penalty.  ``box``
    optionally caps ``|theta_j|``; the penalty already keeps the solution
    bounded, so the default leaves coefficients free.

    Returns
    -------
    FitResult
        ``obj_penalized`` includes the l1 penalty actually applied.
    """
    tau = check_tau(tau)
    if lambda_bc_value < 0:
        raise ValueError("penalty level must be nonnegative")
    n, p = data.n, data.p
    sigma = np.sqrt(np.mean(data.X * data.X, axis=0))
    if np.any(sigma == 0):
        raise ValueError("zero column in the design; cannot standardize the penalty")
    w = sigma * (lambda_bc_value / n)
    if not penalize_intercept:
        if not 0 <= intercept_col < p:
            raise ValueError("intercept_col out of range")
        w[intercept_col] = 0.0
    t0 = time.perf_counter()
    # variables: [theta+ (p), theta- (p), r (n), s (n)]
    c = np.concatenate([w, w, np.full(n, tau / n), np.full(n, (1.0 - tau) / n)])
    A = np.hstack([data.X, -data.X, np.eye(n), -np.eye(n)])
    hi = box if box is not None else np.inf
    lb = np.zeros(2 * p + 2 * n)
    ub = np.concatenate([np.full(2 * p, hi), np.full(2 * n, np.inf)])
    lp = LinearProgram(c=c, A=A, senses=("=",) * n, b=data.y, lb=lb, ub=ub)
    sol = solve_lp(lp)
    if sol.status != "optimal":
        raise SolverError(f"l1 quantile regression LP ended with status {sol.status}")
    theta = sol.x[:p] - sol.x[p:2 * p]
    theta[np.abs(theta) <= _DUST] = 0.0
    risk = empirical_risk(theta, data, tau)
    penalty = float(np.sum(w * np.abs(theta)))
    return FitResult(
        theta=theta,
        support=support_of(theta),
        obj_unpenalized=risk,
        obj_penalized=risk + penalty,
        iterations=sol.pivots,
        converged=True,
        wall_seconds=time.perf_counter() - t0,
    )


def lambda_bc(data, tau, alpha=0.1, draws=1000, rng=None):
    """Simulated (1 - alpha) quantile of the pivotal penalty statistic.

    Each draw replaces the responses by independent uniforms and records
    ``n * max_j |(1/n) sum_i x_ij / sigma_j * (tau - 1{U_i <= tau})|``.

    Parameters
    ----------
    data : Dataset
    tau : float
    alpha : float
        Right-tail mass; 0.1 reproduces the usual choice.
    draws : int
        Number of Monte Carlo draws, at least 100.
    rng : int, SeedSequence or Generator, optional

    Returns
    -------
    float
    """
    tau = check_tau(tau)
    if draws < 100:
        raise ValueError("need at least 100 simulation draws")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    rng = np.random.default_rng(rng)
    sigma = np.sqrt(np.mean(data.X * data.X, axis=0))
    if np.any(sigma == 0):
        raise ValueError("zero column in the design; cannot standardize")
    Xt = data.X / sigma
    U = rng.random((draws, data.n))
    xi = tau - (U <= tau)                      # (draws, n)
    stats = np.max(np.abs(xi @ Xt), axis=1)    # n * (1/n) cancels
    k = int(np.ceil((1.0 - alpha) * draws - 1e-9))
    k = min(max(k, 1), draws)
    return float(np.sort(stats)[k - 1])
