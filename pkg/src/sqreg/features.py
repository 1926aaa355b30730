"""Feature dictionary builders: B-spline blocks, category dummies, interactions.

Spline knots sit at equispaced empirical quantiles with clamped boundary
knots at the observed min/max; the first basis column is dropped from
every spline block so a global intercept can be added without losing
rank.  Discretized columns drop their first category for the same
reason.
"""

from dataclasses import dataclass

import numpy as np

from .core import Dataset

__all__ = ["ColumnRule", "FeatureSpec", "SCHOOLING_EDGES", "bspline_basis",
           "bspline_expand", "discretize", "build_features"]

# four schooling bins: under 12 years, exactly 12, between 12 and 16, 16 or more
SCHOOLING_EDGES = (12.0, 13.0, 16.0)


@dataclass(frozen=True)
class ColumnRule:
    """Directive for one raw column: passthrough | discretize | bspline | drop."""

    kind: str = "passthrough"
    edges: tuple = ()
    degree: int = 3
    knots: int = 4

    def __post_init__(self):
        if self.kind not in ("passthrough", "discretize", "bspline", "drop"):
            raise ValueError(f"unknown directive {self.kind!r}")
        if self.kind == "discretize" and not self.edges:
            raise ValueError("discretize needs breakpoints")
        if self.kind == "bspline" and self.knots < 1:
            raise ValueError("need at least one interior knot")


@dataclass(frozen=True)
class FeatureSpec:
    """Per-column rules plus spline-by-column interaction groups.

    ``rules`` maps raw column names to directives; unlisted columns pass
    through.  Each interaction pair names a spline-expanded source column
    and the other source columns whose produced features multiply every
    basis column of that block.
    """

    rules: dict
    interactions: tuple = ()
    include_intercept: bool = True

    def rule_for(self, name):
        return self.rules.get(name, ColumnRule())


def _knot_vector(x, degree, n_interior):
    lo, hi = float(np.min(x)), float(np.max(x))
    if lo == hi:
        raise ValueError("cannot build a spline basis on a constant column")
    probs = [(i + 1) / (n_interior + 1) for i in range(n_interior)]
    interior = np.quantile(x, probs)
    return np.concatenate([np.full(degree + 1, lo), interior, np.full(degree + 1, hi)])


def bspline_basis(x, degree, n_interior):
    """Full spline basis matrix, shape (n, n_interior + degree + 1).

    Cox-de Boor recursion on clamped knots; the rightmost sample point is
    assigned to the last non-degenerate interval so the basis still sums
    to one there.
    """
    x = np.asarray(x, dtype=float)
    t = _knot_vector(x, degree, n_interior)
    n_basis = len(t) - degree - 1
    nseg = len(t) - 1
    B = np.zeros((x.size, nseg))
    for i in range(nseg):
        B[:, i] = (t[i] <= x) & (x < t[i + 1])
    last = max(i for i in range(nseg) if t[i] < t[i + 1])
    B[x == t[-1], last] = 1.0
    for k in range(1, degree + 1):
        Bk = np.zeros((x.size, nseg - k))
        for i in range(nseg - k):
            left = t[i + k] - t[i]
            if left > 0:
                Bk[:, i] += (x - t[i]) / left * B[:, i]
            right = t[i + k + 1] - t[i + 1]
            if right > 0:
                Bk[:, i] += (t[i + k + 1] - x) / right * B[:, i + 1]
        B = Bk
    return B[:, :n_basis]


def bspline_expand(x, degree=3, n_interior=4):
    """Spline block with the first basis column dropped: width knots + degree."""
    return bspline_basis(x, degree, n_interior)[:, 1:]


def discretize(x, edges):
    """Dummy columns for the bins cut at ``edges``, dropping the first bin.

    Bin b holds points with edges[b-1] <= x < edges[b]; the open-ended
    first bin is the baseline, so the block has len(edges) columns.
    """
    x = np.asarray(x, dtype=float)
    edges = np.asarray(edges, dtype=float)
    if np.any(np.diff(edges) <= 0):
        raise ValueError("breakpoints must be strictly increasing")
    codes = np.searchsorted(edges, x, side="right")
    block = np.zeros((x.size, len(edges)))
    for b in range(1, len(edges) + 1):
        block[:, b - 1] = codes == b
    return block


def build_features(raw, spec):
    """Expand a raw dataset into the dictionary described by ``spec``.

    Column order is deterministic: intercept, passthrough, dummy blocks,
    spline blocks, then interactions in spec order.  Produced names
    encode their source column and basis/bin index.
    """
    unknown = set(spec.rules) - set(raw.names)
    if unknown:
        raise ValueError(f"rules reference unknown columns: {sorted(unknown)}")
    produced = {}   # source column -> list of (name, values)
    blocks = {"passthrough": [], "discretize": [], "bspline": []}
    for j, name in enumerate(raw.names):
        rule = spec.rule_for(name)
        x = raw.X[:, j]
        if rule.kind == "drop":
            continue
        if rule.kind == "passthrough":
            cols = [(name, x)]
        elif rule.kind == "discretize":
            block = discretize(x, rule.edges)
            if not block.any():
                raise ValueError(f"discretizing {name!r} produced an all-zero block")
            cols = [(f"{name}_bin{b + 1}", block[:, b]) for b in range(block.shape[1])]
        else:
            block = bspline_expand(x, rule.degree, rule.knots)
            if not block.any():
                raise ValueError(f"spline block for {name!r} is identically zero")
            cols = [(f"{name}_bs{i + 1}", block[:, i]) for i in range(block.shape[1])]
        produced[name] = cols
        blocks[rule.kind].append(cols)

    names, columns = [], []
    if spec.include_intercept:
        names.append("intercept")
        columns.append(np.ones(raw.n))
    for kind in ("passthrough", "discretize", "bspline"):
        for cols in blocks[kind]:
            for cname, values in cols:
                names.append(cname)
                columns.append(values)
    for src, others in spec.interactions:
        if src not in produced or spec.rule_for(src).kind != "bspline":
            raise ValueError(f"interaction source {src!r} is not a spline column")
        for oname in others:
            if oname not in produced:
                raise ValueError(f"interaction partner {oname!r} was not produced")
            for bname, bvals in produced[src]:
                for pname, pvals in produced[oname]:
                    names.append(f"{bname}*{pname}")
                    columns.append(bvals * pvals)
    return Dataset(np.column_stack(columns), raw.y, tuple(names))
