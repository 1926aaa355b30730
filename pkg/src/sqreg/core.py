"""Loss primitives for sparse quantile regression.

Everything downstream consumes the pieces defined here: the asymmetric
check loss, its differentiable surrogate (obtained by damping the dual
weights of the max-form loss with a quadratic penalty), the surrogate's
gradient, and the curvature constant that sets the step size of the
first-order solvers.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Dataset",
    "SmoothingParams",
    "FitResult",
    "check_tau",
    "c_tau",
    "check_loss",
    "empirical_risk",
    "smoothed_risk",
    "smoothed_gradient",
    "lipschitz_h",
    "support_of",
]


def check_tau(tau):
    """Validate a quantile level, returning it as a float in (0, 1)."""
    tau = float(tau)
    if not 0.0 < tau < 1.0:
        raise ValueError(f"quantile level must lie strictly in (0, 1), got {tau}")
    return tau


def c_tau(tau):
    """Curvature constant max(tau^2, (1-tau)^2) of the dual weight box."""
    tau = check_tau(tau)
    return max(tau * tau, (1.0 - tau) * (1.0 - tau))


@dataclass(frozen=True)
class Dataset:
    """Design matrix, response vector and column names, immutable once built.

    Parameters
    ----------
    X : array_like, shape (n, p)
        Covariate matrix; column j holds covariate j.
    y : array_like, shape (n,)
        Response vector.
    names : sequence of str, optional
        Unique column labels; defaults to ``x1 .. xp``.
    """

    X: np.ndarray
    y: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise ValueError("X must be two-dimensional")
        n, p = X.shape
        if n < 1 or p < 1:
            raise ValueError("X needs at least one row and one column")
        if y.shape[0] != n:
            raise ValueError(f"len(y)={y.shape[0]} does not match n={n}")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ValueError("data contain non-finite entries")
        names = tuple(self.names) if self.names else tuple(f"x{j + 1}" for j in range(p))
        if len(names) != p:
            raise ValueError(f"{len(names)} names for {p} columns")
        if len(set(names)) != p:
            raise ValueError("column names must be unique")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "names", names)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


@dataclass(frozen=True)
class SmoothingParams:
    """Smoothing width ``delta``, curvature constant and target tolerance."""

    delta: float
    c_tau: float
    eps: float

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if not 0.0 < self.c_tau < 1.0:
            raise ValueError("c_tau must lie in (0, 1)")
        if self.eps <= 0:
            raise ValueError("eps must be positive")

    @classmethod
    def from_tolerance(cls, eps, tau):
        """Build parameters achieving approximation error ``eps``: delta = 2 eps / c_tau."""
        ct = c_tau(tau)
        return cls(delta=2.0 * float(eps) / ct, c_tau=ct, eps=float(eps))


@dataclass
class FitResult:
    """Fitted coefficients plus solver diagnostics.

    ``obj_unpenalized`` is the empirical check risk at ``theta``;
    ``obj_penalized`` adds the solver's own penalty term (``lam * |support|``
    for the l0 solvers).  ``gap`` is the proven optimality gap, set only by
    the exact solvers.  ``trace`` and ``step_sqnorms`` record the iterate
    objectives and squared step lengths when the caller asked for them.
    """

    theta: np.ndarray
    support: tuple
    obj_unpenalized: float
    obj_penalized: float
    iterations: int
    converged: bool
    wall_seconds: float
    gap: float | None = None
    trace: list | None = field(default=None, repr=False)
    step_sqnorms: list | None = field(default=None, repr=False)

    @property
    def sparsity(self):
        return len(self.support)


def support_of(theta, tol=0.0):
    """Sorted indices of the entries of ``theta`` exceeding ``tol`` in magnitude."""
    theta = np.asarray(theta, dtype=float)
    return tuple(int(j) for j in np.flatnonzero(np.abs(theta) > tol))


def check_loss(t, u, tau):
    """Asymmetric check loss (t - u) * (tau - 1{t <= u}).

    Parameters
    ----------
    t, u : float or ndarray
        Observed value and fitted value; broadcast against each other.
    tau : float
        Quantile level in (0, 1).

    Returns
    -------
    float or ndarray
        Nonnegative loss, tau-weighted for positive residuals and
        (1 - tau)-weighted for negative ones.
    """
    tau = check_tau(tau)
    r = np.asarray(t, dtype=float) - np.asarray(u, dtype=float)
    out = r * (tau - (r <= 0.0))
    return float(out) if np.ndim(out) == 0 else out


def empirical_risk(theta, data, tau):
    """Mean check loss of the linear fit ``X theta`` on ``data``.

    Parameters
    ----------
    theta : array_like, shape (p,)
        Coefficient vector.
    data : Dataset
    tau : float
        Quantile level.

    Returns
    -------
    float
    """
    tau = check_tau(tau)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (data.p,):
        raise ValueError(f"theta has shape {theta.shape}, expected ({data.p},)")
    u = data.y - data.X @ theta
    return float(np.mean(u * (tau - (u <= 0.0))))


def _dual_weights(u, tau, delta):
    # maximizer of w*u - (delta/2) w^2 over the box [tau-1, tau], per observation
    return np.clip(u / delta, tau - 1.0, tau)


def smoothed_risk(theta, data, tau, delta):
    """Smoothed check risk with quadratic damping of the dual weights.

    For ``delta = 0`` this is exactly :func:`empirical_risk`; for
    ``delta > 0`` it underestimates the exact risk by at most
    ``delta * c_tau / 2``.

    Parameters
    ----------
    theta : array_like, shape (p,)
    data : Dataset
    tau : float
    delta : float
        Nonnegative smoothing width.

    Returns
    -------
    float
    """
    tau = check_tau(tau)
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if delta == 0:
        return empirical_risk(theta, data, tau)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (data.p,):
        raise ValueError(f"theta has shape {theta.shape}, expected ({data.p},)")
    u = data.y - data.X @ theta
    w = _dual_weights(u, tau, delta)
    return float(np.mean(w * u - 0.5 * delta * w * w))


def smoothed_gradient(theta, data, tau, delta):
    """Gradient of :func:`smoothed_risk` in ``theta``; requires ``delta > 0``.

    Equals ``-(1/n) sum_i x_i w_i`` where ``w_i`` is the optimal damped
    dual weight of observation i.
    """
    tau = check_tau(tau)
    if delta <= 0:
        raise ValueError("gradient needs a positive smoothing width")
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (data.p,):
        raise ValueError(f"theta has shape {theta.shape}, expected ({data.p},)")
    u = data.y - data.X @ theta
    w = _dual_weights(u, tau, delta)
    return -(data.X.T @ w) / data.n


def lipschitz_h(data, delta):
    """Gradient Lipschitz constant trace(sum_i x_i x_i') / (n delta)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return float(np.sum(data.X * data.X) / (data.n * delta))
