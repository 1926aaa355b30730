"""Dense two-phase primal simplex with Bland's anti-cycling rule.

The engine minimizes ``c @ x`` subject to row constraints with mixed
senses and per-variable bounds.  It is deliberately a plain dense
tableau method: every problem this package generates is desk scale, and
determinism matters more than speed.  Bland's entering/leaving rule is
used throughout, so the method cannot cycle.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["LinearProgram", "LpSolution", "SolverError", "solve_lp", "FEAS_TOL"]

FEAS_TOL = 1e-9
_PIVOT_TOL = 1e-10
_COST_TOL = 1e-9


class SolverError(RuntimeError):
    """An optimizer finished without a usable solution."""


@dataclass
class LinearProgram:
    """min c @ x  s.t.  A x (sense) b,  lb <= x <= ub.

    ``senses[i]`` is one of ``"<"``, ``"="``, ``">"``; bounds may be
    ``+-inf``.
    """

    c: np.ndarray
    A: np.ndarray
    senses: tuple
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.asarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.senses = tuple(self.senses)
        n = self.c.shape[0]
        m = self.A.shape[0] if self.A.size else len(self.senses)
        if self.A.size == 0:
            self.A = np.zeros((m, n))
        if self.A.shape != (m, n):
            raise ValueError(f"A has shape {self.A.shape}, expected ({m}, {n})")
        if len(self.senses) != m or self.b.shape[0] != m:
            raise ValueError("senses/b length must match the row count")
        bad = set(self.senses) - {"<", "=", ">"}
        if bad:
            raise ValueError(f"unknown senses {sorted(bad)}")
        self.lb = np.asarray(self.lb, dtype=float).ravel()
        self.ub = np.asarray(self.ub, dtype=float).ravel()
        if self.lb.shape[0] != n or self.ub.shape[0] != n:
            raise ValueError("bound vectors must have one entry per variable")
        if np.any(self.lb > self.ub):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(self.lb == np.inf) or np.any(self.ub == -np.inf):
            raise ValueError("bounds pin a variable at infinity")

    @property
    def n_vars(self):
        return self.c.shape[0]

    @property
    def n_rows(self):
        return self.A.shape[0]


@dataclass
class LpSolution:
    """status is one of optimal | infeasible | unbounded | iteration_limit."""

    status: str
    x: np.ndarray | None
    objective: float | None
    pivots: int


def _standardize(lp):
    """Rewrite the LP over nonnegative variables with equality rows only.

    Returns (A, b, c, slack_cols, recover) where ``recover`` maps a
    standard-form point back to original variables.  b is made
    nonnegative by row sign flips.
    """
    m0, n0 = lp.n_rows, lp.n_vars
    c_std = []
    b = lp.b.copy().astype(float)
    extra_rows = []    # (std column, residual upper bound) for two-sided vars
    transforms = []    # per original variable: (kind, offset, std column)

    # Variable substitutions.  Column k of the standard problem is
    # described by (orig_index, sign) so A columns can be assembled fast.
    col_map = []       # list of (j, sign)
    for j in range(n0):
        lo, hi = lp.lb[j], lp.ub[j]
        if lo == hi:
            # fixed variable: fold into the right-hand side
            b -= lp.A[:, j] * lo
            transforms.append(("fixed", lo, None))
        elif np.isfinite(lo):
            col_map.append((j, 1.0))
            c_std.append(lp.c[j])
            b -= lp.A[:, j] * lo
            k = len(col_map) - 1
            if np.isfinite(hi):
                extra_rows.append((k, hi - lo))
            transforms.append(("shift", lo, k))
        elif np.isfinite(hi):
            # x = hi - z, z >= 0
            col_map.append((j, -1.0))
            c_std.append(-lp.c[j])
            b -= lp.A[:, j] * hi
            transforms.append(("flip", hi, len(col_map) - 1))
        else:
            col_map.append((j, 1.0))
            col_map.append((j, -1.0))
            c_std.extend([lp.c[j], -lp.c[j]])
            transforms.append(("free", 0.0, len(col_map) - 2))

    n_std = len(col_map)
    A = np.zeros((m0 + len(extra_rows), n_std))
    for k, (j, sign) in enumerate(col_map):
        A[:m0, k] = sign * lp.A[:, j]
    senses = list(lp.senses)
    b_full = np.concatenate([b, np.zeros(len(extra_rows))])
    for i, (k, ub_val) in enumerate(extra_rows):
        A[m0 + i, k] = 1.0
        b_full[m0 + i] = ub_val
        senses.append("<")

    # senses -> equalities with slacks
    m = A.shape[0]
    slack_cols = {}
    n_slacks = sum(1 for s in senses if s != "=")
    A = np.hstack([A, np.zeros((m, n_slacks))])
    c_full = np.concatenate([np.asarray(c_std, dtype=float), np.zeros(n_slacks)])
    k = n_std
    for i, s in enumerate(senses):
        if s == "<":
            A[i, k] = 1.0
            slack_cols[i] = k
            k += 1
        elif s == ">":
            A[i, k] = -1.0
            slack_cols[i] = k
            k += 1

    neg = b_full < 0
    A[neg] *= -1.0
    b_full[neg] = -b_full[neg]

    def recover(z):
        x = np.empty(n0)
        for j, (kind, val, k) in enumerate(transforms):
            if kind == "fixed":
                x[j] = val
            elif kind == "shift":
                x[j] = val + z[k]
            elif kind == "flip":
                x[j] = val - z[k]
            else:
                x[j] = z[k] - z[k + 1]
        return x

    return A, b_full, c_full, slack_cols, recover


def _crash_basis(A, b, slack_cols):
    """Pick an identity-like starting basis, preferring slack columns.

    Rows left without a basic column get an artificial variable.
    Returns (A, n_artificials, basis) where A has artificials appended
    and rows scaled so each basic column is a unit vector.
    """
    m, n = A.shape
    basis = [-1] * m
    used = set()
    for i, k in slack_cols.items():
        if A[i, k] > _PIVOT_TOL:
            basis[i] = k
            used.add(k)
    # singleton columns with a positive entry in an unassigned row
    nnz_count = np.count_nonzero(A, axis=0)
    for k in range(n):
        if k in used or nnz_count[k] != 1:
            continue
        i = int(np.flatnonzero(A[:, k])[0])
        if basis[i] == -1 and A[i, k] > _PIVOT_TOL:
            scale = A[i, k]
            A[i] /= scale
            b[i] /= scale
            basis[i] = k
            used.add(k)
    need = [i for i in range(m) if basis[i] == -1]
    if need:
        art = np.zeros((m, len(need)))
        for t, i in enumerate(need):
            art[i, t] = 1.0
            basis[i] = n + t
        A = np.hstack([A, art])
    return A, len(need), basis


def _iterate(T, basis, obj_row, n_active, max_pivots, pivots):
    """Run Bland-rule pivots until optimal/unbounded/limit.

    ``T`` is the (m, n+1) tableau in canonical form, ``obj_row`` the
    reduced-cost row over all columns.  Returns (status, pivots).
    """
    m = T.shape[0]
    basis_arr = np.asarray(basis)
    while True:
        candidates = np.flatnonzero(obj_row[:n_active] < -_COST_TOL)
        if candidates.size == 0:
            return "optimal", pivots
        if pivots >= max_pivots:
            return "iteration_limit", pivots
        entering = int(candidates[0])  # Bland: smallest improving index
        col = T[:, entering]
        rhs = T[:, -1]
        eligible = col > _PIVOT_TOL
        if not eligible.any():
            return "unbounded", pivots
        ratios = np.full(m, np.inf)
        ratios[eligible] = rhs[eligible] / col[eligible]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios <= rmin + 1e-12)
        leave = int(ties[np.argmin(basis_arr[ties])])  # Bland: lowest basic index
        piv = T[leave, entering]
        T[leave] /= piv
        colvals = T[:, entering].copy()
        colvals[leave] = 0.0
        T -= np.outer(colvals, T[leave])
        obj_row -= obj_row[entering] * T[leave]
        basis[leave] = entering
        basis_arr[leave] = entering
        pivots += 1


def solve_lp(lp, max_pivots=None):
    """Solve a :class:`LinearProgram`, returning an :class:`LpSolution`.

    The pivot cap defaults to ``50 * (rows + cols)`` of the standardized
    problem.  The result is deterministic for a given input.
    """
    A, b, c, slack_cols, recover = _standardize(lp)
    A, n_art, basis = _crash_basis(A, b, slack_cols)
    m, n_total = A.shape
    n_real = n_total - n_art
    if max_pivots is None:
        max_pivots = 50 * (m + n_total)
    T = np.hstack([A, b[:, None]])
    pivots = 0

    if n_art:
        # phase 1: minimize the sum of artificials
        c1 = np.zeros(n_total)
        c1[n_real:] = 1.0
        obj_row = c1.copy()
        for i in range(m):
            if obj_row[basis[i]] != 0.0:
                obj_row = obj_row - obj_row[basis[i]] * T[i, :-1]
        obj_row = np.append(obj_row, 0.0)
        status, pivots = _iterate(T, basis, obj_row, n_total, max_pivots, pivots)
        if status == "iteration_limit":
            return LpSolution("iteration_limit", None, None, pivots)
        z1 = sum(T[i, -1] for i in range(m) if basis[i] >= n_real)
        if z1 > 1e-7:
            return LpSolution("infeasible", None, None, pivots)
        # drive remaining artificials out of the basis; drop redundant rows
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] < n_real:
                continue
            row = T[i, :n_real]
            cand = np.flatnonzero(np.abs(row) > 1e-9)
            if cand.size:
                k = int(cand[0])
                piv = T[i, k]
                T[i] /= piv
                colvals = T[:, k].copy()
                colvals[i] = 0.0
                T -= np.outer(colvals, T[i])
                basis[i] = k
            else:
                keep[i] = False
        if not keep.all():
            T = T[keep]
            basis = [basis[i] for i in range(m) if keep[i]]
            m = T.shape[0]
        T = np.hstack([T[:, :n_real], T[:, -1:]])

    # phase 2
    obj_row = c.copy()
    for i in range(m):
        if obj_row[basis[i]] != 0.0:
            obj_row = obj_row - obj_row[basis[i]] * T[i, :-1]
    obj_row = np.append(obj_row, 0.0)
    status, pivots = _iterate(T, basis, obj_row, n_real, max_pivots, pivots)
    if status == "unbounded":
        return LpSolution("unbounded", None, None, pivots)

    z = np.zeros(n_real)
    for i in range(m):
        if basis[i] < n_real:
            z[basis[i]] = T[i, -1]
    x = recover(z)
    objective = float(lp.c @ x)
    if status == "iteration_limit":
        return LpSolution("iteration_limit", x, objective, pivots)
    return LpSolution("optimal", x, objective, pivots)
