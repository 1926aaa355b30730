"""Tuning grids and validation-risk model selection.

The penalized methods are tuned through a scale-free constant ``c`` that
is turned into a penalty level by ``lambda_from_c``; the constrained
method is tuned directly over its sparsity budget.  ``tune`` fits every
candidate on the training split and keeps the one with the smallest
check risk on the validation split.
"""

import csv
import io
import logging
from dataclasses import dataclass

import numpy as np

from .core import check_tau, empirical_risk

__all__ = ["TuningGrid", "TuneRow", "default_grid", "lambda_from_c", "tune",
           "risk_table_csv"]

log = logging.getLogger(__name__)

_METHODS = ("l0_pqr", "l0_cqr", "l1_pqr")


@dataclass(frozen=True)
class TuningGrid:
    """Sorted candidate values for one method's tuning parameter."""

    method: str
    values: tuple
    include_zero: bool = False

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        vals = tuple(self.values)
        if not vals:
            raise ValueError("candidate grid is empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("candidates must be strictly increasing")
        object.__setattr__(self, "values", vals)


def default_grid(method, p, k0=100):
    """Standard grids: a 20-point c-grid 0.1..2.0 for the penalized methods
    (prepending 0 in the low-dimensional regimes) and 1..min(p, 25) for the
    constrained one."""
    base = tuple(round(0.1 * i, 10) for i in range(1, 21))
    if method == "l0_pqr":
        zero = p < k0
    elif method == "l1_pqr":
        zero = p < 100
    elif method == "l0_cqr":
        return TuningGrid(method, tuple(range(1, min(p, 25) + 1)))
    else:
        raise ValueError(f"unknown method {method!r}")
    values = ((0.0,) if zero else ()) + base
    return TuningGrid(method, values, include_zero=zero)


def lambda_from_c(c, data):
    """Penalty level c * mean(|y|) * ln(p) / n."""
    if c < 0:
        raise ValueError("c must be nonnegative")
    return float(c) * float(np.mean(np.abs(data.y))) * np.log(data.p) / data.n


@dataclass
class TuneRow:
    """One grid point of a tuning sweep."""

    value: float
    risk: float | None
    sparsity: int | None
    error: str | None = None


def tune(fitter, grid, train, valid, tau):
    """Sweep ``grid``, fitting on ``train`` and scoring check risk on ``valid``.

    ``fitter(train, value, tau)`` must return a FitResult.  Ties go to the
    smaller validation risk, then the sparser fit, then the smaller
    candidate.  Candidates whose fit raises are skipped with a warning.

    Returns
    -------
    (best_value, best_fit, rows)
    """
    tau = check_tau(tau)
    if train.p != valid.p:
        raise ValueError("train and validation samples disagree on dimension")
    rows = []
    best_key = None
    best = None
    for value in grid.values:
        try:
            fit = fitter(train, value, tau)
        except Exception as exc:  # noqa: BLE001 - sweep must survive bad candidates
            log.warning("candidate %s failed: %s", value, exc)
            rows.append(TuneRow(value=value, risk=None, sparsity=None, error=str(exc)))
            continue
        risk = empirical_risk(fit.theta, valid, tau)
        nnz = len(fit.support)
        rows.append(TuneRow(value=value, risk=risk, sparsity=nnz))
        key = (risk, nnz, value)
        if best_key is None or key < best_key:
            best_key = key
            best = (value, fit)
    if best is None:
        raise RuntimeError("every candidate in the grid failed")
    return best[0], best[1], rows


def risk_table_csv(rows, path=None):
    """Serialize tuning rows as CSV; returns the text when no path is given."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["value", "valid_risk", "sparsity", "error"])
    for row in rows:
        writer.writerow([
            row.value,
            "" if row.risk is None else repr(row.risk),
            "" if row.sparsity is None else row.sparsity,
            row.error or "",
        ])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
