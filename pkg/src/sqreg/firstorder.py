"""Scalable first-order solvers for l0-penalized and l0-constrained fits.

The workhorse is a proximal iteration on the smoothed check risk: take a
gradient step, then apply the closed-form l0/box thresholding operator.
With a step constant at least the gradient's Lipschitz bound, each
iteration decreases the penalized smoothed objective, and the squared
step lengths decay at rate O(1/N).  ``multi_start_fo`` wraps the
iteration in the warm-start chain used by the simulation studies.
"""

import logging
import time
from dataclasses import dataclass

import numpy as np

from .core import (
    FitResult,
    SmoothingParams,
    check_tau,
    empirical_risk,
    lipschitz_h,
    smoothed_gradient,
    smoothed_risk,
    support_of,
)
from .qreg import l1_pqr_fit, lambda_bc, qr_fit

__all__ = ["ProxConfig", "l0_box_threshold", "h_map", "fo_solve", "multi_start_fo", "fo_cqr"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProxConfig:
    """Penalty, cardinality cap, box half-width and iteration controls.

    ``k0=None`` means no cap beyond the dimension.  Defaults follow the
    solver's standard operating point: tolerance 2e-4, envelope factor 2,
    relative convergence 1e-8, at most 1000 iterations, box half-width 10.
    """

    lam: float = 0.0
    k0: int | None = None
    box: float = 10.0
    eps: float = 2e-4
    l_factor: float = 2.0
    max_iter: int = 1000
    conv_tol: float = 1e-8

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.k0 is not None and self.k0 < 0:
            raise ValueError("k0 must be nonnegative")
        if self.box <= 0 or not np.isfinite(self.box):
            raise ValueError("box must be positive and finite")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.l_factor < 1.0:
            raise ValueError("l_factor must be at least 1")
        if self.max_iter < 1 or self.conv_tol <= 0:
            raise ValueError("bad iteration controls")

    def cap(self, p):
        """Effective cardinality cap for a p-dimensional problem."""
        return p if self.k0 is None else min(self.k0, p)


def l0_box_threshold(t, lam, box, k0):
    """Closed-form minimizer of ||b - t||^2 + lam * ||b||_0 over the box/cap set.

    Feasible vectors satisfy ``|b_j| <= box`` and ``||b||_0 <= k0``.  Per
    coordinate the candidate keeps ``t_j`` when it beats zero after
    clamping; if more than ``k0`` coordinates survive, only the ``k0``
    largest ``|t_j|`` are retained (ties to the smaller index).
    """
    t = np.asarray(t, dtype=float)
    p = t.size
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if box <= 0:
        raise ValueError("box must be positive")
    if not 0 <= k0 <= p:
        raise ValueError("k0 must lie in [0, p]")
    beta = np.zeros(p)
    inside = np.abs(t) <= box
    keep = inside & (np.abs(t) > np.sqrt(lam))
    beta[keep] = t[keep]
    above = t > box
    keep = above & (box * box - 2.0 * t * box + lam < 0.0)
    beta[keep] = box
    below = t < -box
    keep = below & (box * box + 2.0 * t * box + lam < 0.0)
    beta[keep] = -box
    if np.count_nonzero(beta) > k0:
        order = np.argsort(-np.abs(t), kind="stable")
        beta[order[k0:]] = 0.0
    return beta


def h_map(t, data, tau, delta, l, cfg):
    """One proximal descent step: gradient move then l0/box thresholding.

    Minimizes the quadratic envelope of the smoothed risk around ``t``
    plus ``cfg.lam * ||theta||_0``; completing the square turns that into
    the thresholding problem with penalty ``2 * lam / l``.  For
    ``l >= lipschitz_h`` the penalized smoothed objective cannot increase.
    """
    if l <= 0:
        raise ValueError("step constant must be positive")
    center = t - smoothed_gradient(t, data, tau, delta) / l
    return l0_box_threshold(center, 2.0 * cfg.lam / l, cfg.box, cfg.cap(data.p))


def _project_feasible(theta, box, k0):
    theta = np.clip(np.asarray(theta, dtype=float), -box, box)
    if np.count_nonzero(theta) > k0:
        order = np.argsort(-np.abs(theta), kind="stable")
        theta = theta.copy()
        theta[order[k0:]] = 0.0
    return theta


def fo_solve(data, tau, cfg, theta_init=None, keep_trace=False):
    """Iterate :func:`h_map` from ``theta_init`` until the smoothed penalized
    objective stalls.

    Smoothing width is ``2 * cfg.eps / c_tau`` and the step constant is
    ``cfg.l_factor`` times the Lipschitz bound.  Stops when the relative
    decrease drops below ``cfg.conv_tol`` or after ``cfg.max_iter`` steps.

    Returns
    -------
    FitResult
        Exact (unsmoothed) objectives; with ``keep_trace`` the smoothed
        penalized objective of every iterate and the squared step lengths.
    """
    t0 = time.perf_counter()
    tau = check_tau(tau)
    sp = SmoothingParams.from_tolerance(cfg.eps, tau)
    delta = sp.delta
    l = cfg.l_factor * lipschitz_h(data, delta)
    k0 = cfg.cap(data.p)
    theta = _project_feasible(np.zeros(data.p) if theta_init is None else theta_init,
                              cfg.box, k0)
    q = smoothed_risk(theta, data, tau, delta) + cfg.lam * np.count_nonzero(theta)
    if not np.isfinite(q):
        raise ValueError("non-finite objective at the starting point")
    trace = [q]
    steps = []
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        theta_next = h_map(theta, data, tau, delta, l, cfg)
        q_next = (smoothed_risk(theta_next, data, tau, delta)
                  + cfg.lam * np.count_nonzero(theta_next))
        if not np.isfinite(q_next):
            raise ValueError("objective became non-finite; data may be corrupt")
        steps.append(float(np.sum((theta_next - theta) ** 2)))
        trace.append(q_next)
        theta = theta_next
        if q - q_next <= cfg.conv_tol * max(q, 1e-12):
            converged = True
            q = q_next
            break
        q = q_next
    risk = empirical_risk(theta, data, tau)
    support = support_of(theta)
    return FitResult(
        theta=theta,
        support=support,
        obj_unpenalized=risk,
        obj_penalized=risk + cfg.lam * len(support),
        iterations=iterations,
        converged=converged,
        wall_seconds=time.perf_counter() - t0,
        trace=trace if keep_trace else None,
        step_sqnorms=steps if keep_trace else None,
    )


def multi_start_fo(data, tau, cfg, restarts, c, rng_seed=None, intercept_col=None,
                   bc_quantile=None, bc_alpha=0.1, bc_draws=1000):
    """Chained multi-start around :func:`fo_solve`; returns the best restart.

    The first start is the l1-penalized fit whose penalty scale ``c``
    matches the l0 tuning constant; start ``t >= 2`` refits plain
    quantile regression on the support selected by restart ``t - 1``
    (zero vector on an empty support, or an intercept-only refit when
    ``intercept_col`` is given).  ``bc_quantile`` can carry a precomputed
    pivotal quantile so sweeps over ``c`` share one simulation.
    """
    if restarts < 1:
        raise ValueError("need at least one restart")
    tau = check_tau(tau)
    if bc_quantile is None:
        bc_quantile = lambda_bc(data, tau, alpha=bc_alpha, draws=bc_draws, rng=rng_seed)
    warm = l1_pqr_fit(data, tau, c * bc_quantile,
                      penalize_intercept=intercept_col is None,
                      intercept_col=intercept_col if intercept_col is not None else 0)
    theta_init = warm.theta
    best = None
    for t in range(restarts):
        fit = fo_solve(data, tau, cfg, theta_init)
        if best is None or fit.obj_penalized < best.obj_penalized:
            best = fit
        if t + 1 == restarts:
            break
        if fit.support:
            try:
                theta_init = qr_fit(data, fit.support, tau)
            except ValueError as exc:
                log.warning("restart refit failed (%s); reusing previous iterate", exc)
                theta_init = fit.theta
        elif intercept_col is not None:
            theta_init = qr_fit(data, [intercept_col], tau)
        else:
            theta_init = np.zeros(data.p)
    return best


def fo_cqr(data, tau, q, cfg, theta_init=None, refit=True):
    """Cardinality-constrained fit by projected gradient on the smoothed risk.

    Each step keeps the ``q`` largest-magnitude coordinates of the
    gradient move, clamped to the box, and zeroes the rest; iterates
    until the smoothed risk stalls.  The support size never exceeds ``q``.
    With ``refit`` (the default) the selected support is re-fit by plain
    quantile regression afterwards and the better of the two candidates
    is returned.
    """
    t0 = time.perf_counter()
    tau = check_tau(tau)
    if not 0 <= q <= data.p:
        raise ValueError("q must lie in [0, p]")
    if q == 0:
        theta = np.zeros(data.p)
        risk = empirical_risk(theta, data, tau)
        return FitResult(theta=theta, support=(), obj_unpenalized=risk,
                         obj_penalized=risk, iterations=0, converged=True,
                         wall_seconds=time.perf_counter() - t0)
    sp = SmoothingParams.from_tolerance(cfg.eps, tau)
    delta = sp.delta
    l = cfg.l_factor * lipschitz_h(data, delta)
    theta = _project_feasible(np.zeros(data.p) if theta_init is None else theta_init,
                              cfg.box, q)
    obj = smoothed_risk(theta, data, tau, delta)
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        center = theta - smoothed_gradient(theta, data, tau, delta) / l
        theta_next = np.zeros(data.p)
        order = np.argsort(-np.abs(center), kind="stable")
        keep = order[:q]
        theta_next[keep] = np.clip(center[keep], -cfg.box, cfg.box)
        obj_next = smoothed_risk(theta_next, data, tau, delta)
        if not np.isfinite(obj_next):
            raise ValueError("objective became non-finite; data may be corrupt")
        theta = theta_next
        if obj - obj_next <= cfg.conv_tol * max(obj, 1e-12):
            converged = True
            obj = obj_next
            break
        obj = obj_next
    risk = empirical_risk(theta, data, tau)
    support = support_of(theta)
    if refit and support:
        try:
            candidate = np.clip(qr_fit(data, support, tau), -cfg.box, cfg.box)
            risk_c = empirical_risk(candidate, data, tau)
            if risk_c < risk:
                theta, risk = candidate, risk_c
                support = support_of(theta)
        except ValueError:
            log.warning("support refit failed; keeping the projected-gradient iterate")
    return FitResult(
        theta=theta,
        support=support,
        obj_unpenalized=risk,
        obj_penalized=risk,
        iterations=iterations,
        converged=converged,
        wall_seconds=time.perf_counter() - t0,
    )
