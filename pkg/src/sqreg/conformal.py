"""Split conformal prediction intervals from paired quantile fits.

Two conditional quantile curves (levels alpha/2 and 1 - alpha/2) are fit
on a proper training set; held-out calibration scores then widen (or
narrow) the band by an order statistic chosen so that marginal coverage
of at least 1 - alpha holds in finite samples under exchangeability.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import check_tau

__all__ = ["ConformalModel", "PredictionInterval", "CoverageReport",
           "empirical_quantile", "fit_conformal", "predict_interval",
           "evaluate_coverage"]


@dataclass(frozen=True)
class ConformalModel:
    """Fitted band plus the calibrated correction term (may be +inf)."""

    alpha: float
    theta_lo: np.ndarray
    theta_hi: np.ndarray
    scores: np.ndarray
    correction: float


@dataclass(frozen=True)
class PredictionInterval:
    lower: float
    upper: float

    @property
    def length(self):
        return self.upper - self.lower


@dataclass(frozen=True)
class CoverageReport:
    coverage: float
    mean_length: float
    n_infinite: int
    n_crossing: int


def empirical_quantile(values, level):
    """The ceil(level * m)-th order statistic of ``values``; +inf past the end.

    Levels at or below 1/m return the minimum.  Products that land on an
    integer up to float dust are not rounded up.
    """
    v = np.sort(np.asarray(values, dtype=float))
    m = v.size
    if m == 0:
        raise ValueError("need at least one value")
    k = math.ceil(level * m - 1e-9)
    if k > m:
        return float("inf")
    return float(v[max(k, 1) - 1])


def fit_conformal(train, calib, alpha, fitter):
    """Fit the quantile band on ``train`` and calibrate scores on ``calib``.

    ``fitter(dataset, tau)`` must return a length-p coefficient vector.
    The score of a calibration point is how far it falls outside the raw
    band; the correction is the (1 - alpha)(1 + 1/m) empirical quantile
    of the scores.
    """
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 0.5)")
    if train.p != calib.p:
        raise ValueError("train and calibration samples disagree on dimension")
    theta_lo = np.asarray(fitter(train, check_tau(alpha / 2.0)), dtype=float)
    theta_hi = np.asarray(fitter(train, check_tau(1.0 - alpha / 2.0)), dtype=float)
    lo = calib.X @ theta_lo
    hi = calib.X @ theta_hi
    scores = np.maximum(lo - calib.y, calib.y - hi)
    level = (1.0 - alpha) * (1.0 + 1.0 / calib.n)
    correction = empirical_quantile(scores, level)
    return ConformalModel(alpha=alpha, theta_lo=theta_lo, theta_hi=theta_hi,
                          scores=scores, correction=correction)


def predict_interval(model, x_new):
    """Conformal interval at ``x_new``; an infinite correction covers the line."""
    x = np.asarray(x_new, dtype=float)
    lo = float(x @ model.theta_lo) - model.correction
    hi = float(x @ model.theta_hi) + model.correction
    return PredictionInterval(lower=lo, upper=hi)


def evaluate_coverage(model, test):
    """Coverage fraction and mean finite length over a test sample.

    Infinite-length intervals are counted separately, as are points where
    the raw band crosses (lower fit above upper fit) before correction.
    """
    if test.n < 1:
        raise ValueError("test sample is empty")
    raw_lo = test.X @ model.theta_lo
    raw_hi = test.X @ model.theta_hi
    lo = raw_lo - model.correction
    hi = raw_hi + model.correction
    covered = (test.y >= lo) & (test.y <= hi)
    lengths = hi - lo
    finite = np.isfinite(lengths)
    mean_length = float(np.mean(lengths[finite])) if finite.any() else float("nan")
    return CoverageReport(
        coverage=float(np.mean(covered)),
        mean_length=mean_length,
        n_infinite=int(np.sum(~finite)),
        n_crossing=int(np.sum(raw_lo > raw_hi)),
    )
