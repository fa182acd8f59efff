"""Dense two-phase primal simplex with Bland's rule.

Small and exact enough for the zero-sum LPs this package needs; no attempt is
made at sparsity or numerical heroics.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-9


class LPError(ValueError):
    """Inconsistent dimensions in a linear program."""


class LPStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    """Optimize ``c @ x`` subject to ``M[k] @ x  (senses[k])  rhs[k]``.

    ``senses`` entries are ``"<="``, ``"="`` or ``">="``.  ``bounds`` is a
    list of ``(lower, upper)`` pairs with ``None`` for unbounded sides; the
    default is ``x >= 0``.
    """

    c: np.ndarray
    M: np.ndarray
    senses: list[str]
    rhs: np.ndarray
    bounds: list[tuple[float | None, float | None]] | None = None
    maximize: bool = False

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        M = np.asarray(self.M, dtype=float)
        if M.size == 0:
            M = np.zeros((0, n))
        M = np.atleast_2d(M)
        if M.ndim != 2 or M.shape[1] != n:
            raise LPError(f"constraint matrix of shape {M.shape} does not match {n} variables")
        self.M = M
        self.rhs = np.asarray(self.rhs, dtype=float).ravel()
        m = self.M.shape[0]
        if self.rhs.size != m or len(self.senses) != m:
            raise LPError(f"{m} constraint rows need {m} right-hand sides and senses")
        bad = [s for s in self.senses if s not in ("<=", "=", ">=")]
        if bad:
            raise LPError(f"unknown constraint sense {bad[0]!r}")
        if self.bounds is None:
            self.bounds = [(0.0, None)] * n
        if len(self.bounds) != n:
            raise LPError(f"need {n} variable bounds, got {len(self.bounds)}")


@dataclass
class LPResult:
    status: LPStatus
    x: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status is LPStatus.OPTIMAL


def _standard_form(lp: LinearProgram):
    """Rewrite as ``min c'z, A z = b, z >= 0`` plus a map back to ``x``."""
    n = lp.c.size
    cols = []  # (orig var, sign) per standard column; shifts handled separately
    shift = np.zeros(n)
    extra_rows, extra_rhs, extra_sense = [], [], []
    for k, (lo, hi) in enumerate(lp.bounds):
        if lo is not None and np.isfinite(lo):
            shift[k] = lo
            cols.append((k, 1.0))
            if hi is not None and np.isfinite(hi):
                row = np.zeros(n)
                row[k] = 1.0
                extra_rows.append(row)
                extra_rhs.append(hi)
                extra_sense.append("<=")
        elif hi is not None and np.isfinite(hi):
            shift[k] = hi
            cols.append((k, -1.0))
        else:
            cols.append((k, 1.0))
            cols.append((k, -1.0))
    M = np.vstack([lp.M] + extra_rows) if extra_rows else lp.M
    rhs = np.concatenate([lp.rhs, extra_rhs]) if extra_rows else lp.rhs.copy()
    senses = list(lp.senses) + extra_sense
    rhs = rhs - M @ shift
    T = np.zeros((M.shape[0], len(cols)))
    cstd = np.zeros(len(cols))
    sign = -1.0 if lp.maximize else 1.0
    for col, (k, s) in enumerate(cols):
        T[:, col] = s * M[:, k]
        cstd[col] = sign * s * lp.c[k]
    # slacks
    slack_cols = []
    for r, sense in enumerate(senses):
        if sense == "<=":
            slack_cols.append((r, 1.0))
        elif sense == ">=":
            slack_cols.append((r, -1.0))
    S = np.zeros((M.shape[0], len(slack_cols)))
    for col, (r, s) in enumerate(slack_cols):
        S[r, col] = s
    A = np.hstack([T, S])
    c = np.concatenate([cstd, np.zeros(len(slack_cols))])
    b = rhs
    neg = b < 0
    A[neg] *= -1
    b = np.where(neg, -b, b)
    const = sign * float(lp.c @ shift)

    def recover(z):
        x = shift.copy()
        for col, (k, s) in enumerate(cols):
            x[k] += s * z[col]
        return x

    return A, b, c, const, recover


def _pivot(tab, basis, r, q):
    tab[r] /= tab[r, q]
    col = tab[:, q].copy()
    col[r] = 0.0
    tab -= np.outer(col, tab[r])
    basis[r] = q


def _run(tab, basis, n_cols, allowed, max_iter):
    """Bland's-rule iterations on ``tab`` whose last row is the reduced cost row."""
    m = tab.shape[0] - 1
    it = 0
    while it < max_iter:
        cost = tab[-1, :n_cols]
        enter = -1
        for q in range(n_cols):
            if allowed[q] and cost[q] < -PIVOT_TOL:
                enter = q
                break
        if enter < 0:
            return LPStatus.OPTIMAL, it
        colq = tab[:m, enter]
        best, leave = np.inf, -1
        for r in range(m):
            if colq[r] > PIVOT_TOL:
                ratio = tab[r, -1] / colq[r]
                if ratio < best - 1e-14 or (abs(ratio - best) <= 1e-14 and basis[r] < basis[leave]):
                    best, leave = ratio, r
        if leave < 0:
            return LPStatus.UNBOUNDED, it
        _pivot(tab, basis, leave, enter)
        it += 1
    raise RuntimeError("simplex iteration limit reached")


def lp_solve(lp: LinearProgram, max_iter: int = 10_000) -> LPResult:
    """Solve ``lp`` by the two-phase simplex method."""
    A, b, c, const, recover = _standard_form(lp)
    m, n = A.shape
    # phase 1: artificial variable per row
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = A
    tab[:m, n:n + m] = np.eye(m)
    tab[:m, -1] = b
    tab[-1, :n] = -A.sum(axis=0)
    tab[-1, -1] = -b.sum()
    basis = list(range(n, n + m))
    allowed = np.zeros(n + m, dtype=bool)
    allowed[:n] = True  # artificials never re-enter
    status, it1 = _run(tab, basis, n + m, allowed, max_iter)
    if -tab[-1, -1] > FEAS_TOL * max(1.0, np.abs(b).max(initial=0.0)):
        return LPResult(LPStatus.INFEASIBLE, iterations=it1)
    # drive artificials out of the basis where possible, drop redundant rows
    keep = []
    for r in range(m):
        if basis[r] >= n:
            q = next((q for q in range(n) if abs(tab[r, q]) > 1e-9), -1)
            if q >= 0:
                _pivot(tab, basis, r, q)
                keep.append(r)
        else:
            keep.append(r)
    tab = np.vstack([tab[keep][:, list(range(n)) + [-1]], np.zeros((1, n + 1))])
    basis = [basis[r] for r in keep]
    # phase 2 cost row: c - c_B B^-1 A
    tab[-1, :n] = c
    tab[-1, -1] = 0.0
    for r, q in enumerate(basis):
        if tab[-1, q] != 0.0:
            tab[-1] -= tab[-1, q] * tab[r]
    status, it2 = _run(tab, basis, n, np.ones(n, dtype=bool), max_iter)
    if status is LPStatus.UNBOUNDED:
        return LPResult(LPStatus.UNBOUNDED, iterations=it1 + it2)
    z = np.zeros(n)
    for r, q in enumerate(basis):
        z[q] = tab[r, -1]
    x = recover(z)
    obj = float(lp.c @ x)
    return LPResult(LPStatus.OPTIMAL, x, obj, it1 + it2)
