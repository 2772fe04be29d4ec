"""
Dense two-phase simplex for the small linear programs of seam insertion

Minimize c @ x subject to rows (coeffs, relation, rhs) and per-variable
bounds lo <= x <= hi with lo >= 0. Problems here have tens of variables and a
few hundred rows, so a dense tableau is used throughout.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

import config

logger = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

RELATIONS = ("<=", ">=", "=")

# pivots within this magnitude are treated as zero
PIVOT_TOL = 1e-11
# consecutive degenerate pivots before switching from Dantzig's rule to Bland's
DEGENERATE_STREAK = 25

class LpError(ValueError):
    """Raised for malformed linear programs"""

@dataclass(frozen=True)
class Row:
    coeffs: Tuple[float, ...]
    relation: str
    rhs: float
    label: str = ""

    def evaluate(self, x: Sequence[float]) -> float:
        return float(np.dot(self.coeffs, x))

    def violation(self, x: Sequence[float]) -> float:
        """Amount by which x violates the row (0 when satisfied)"""
        value = self.evaluate(x)
        if self.relation == "<=":
            return max(0.0, value - self.rhs)
        if self.relation == ">=":
            return max(0.0, self.rhs - value)
        return abs(value - self.rhs)

@dataclass
class LinearProgram:
    n_vars: int
    objective: Sequence[float]
    constraints: List[Row] = field(default_factory=list)
    var_bounds: Optional[List[Tuple[float, float]]] = None

    def bounds(self) -> List[Tuple[float, float]]:
        if self.var_bounds is None:
            return [(0.0, float("inf"))] * self.n_vars
        return list(self.var_bounds)

    def check(self):
        """Validate dimensions and bounds, raising LpError"""
        if self.n_vars < 0:
            raise LpError("n_vars must be >= 0")
        if len(self.objective) != self.n_vars:
            raise LpError(f"objective has {len(self.objective)} coefficients, expected {self.n_vars}")
        for k, row in enumerate(self.constraints):
            if len(row.coeffs) != self.n_vars:
                raise LpError(f"row {k} ({row.label}) has {len(row.coeffs)} coefficients, expected {self.n_vars}")
            if row.relation not in RELATIONS:
                raise LpError(f"row {k} ({row.label}) has unknown relation {row.relation!r}")
            if not np.isfinite(row.rhs) or not np.all(np.isfinite(row.coeffs)):
                raise LpError(f"row {k} ({row.label}) has non-finite entries")
        bounds = self.bounds()
        if len(bounds) != self.n_vars:
            raise LpError(f"var_bounds has {len(bounds)} entries, expected {self.n_vars}")
        for k, (lo, hi) in enumerate(bounds):
            if lo < 0.0 or not np.isfinite(lo):
                raise LpError(f"variable {k}: lower bound {lo} must be finite and >= 0")
            if hi < lo:
                raise LpError(f"variable {k}: upper bound {hi} below lower bound {lo}")

    def max_violation(self, x: Sequence[float]) -> float:
        worst = 0.0
        for row in self.constraints:
            worst = max(worst, row.violation(x))
        for value, (lo, hi) in zip(x, self.bounds()):
            worst = max(worst, lo - value, value - hi)
        return worst

@dataclass(frozen=True)
class LpResult:
    status: str
    solution: Optional[np.ndarray] = None
    objective_value: float = float("nan")
    iterations: int = 0
    max_violation: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

def _pivot_col(cost: np.ndarray, columns: int, bland: bool) -> int:
    """Entering column, or -1 when the cost row is optimal"""
    reduced = cost[:columns]
    candidates = np.nonzero(reduced < -config.LP_FEAS_TOL)[0]
    if candidates.size == 0:
        return -1
    if bland:
        return int(candidates[0])
    return int(candidates[np.argmin(reduced[candidates])])

def _pivot_row(T: np.ndarray, basis: np.ndarray, rows: int, col: int) -> int:
    """Leaving row by the minimum ratio test, ties to the smallest basic index"""
    column = T[:rows, col]
    positive = np.nonzero(column > PIVOT_TOL)[0]
    if positive.size == 0:
        return -1
    ratios = T[positive, -1] / column[positive]
    best = ratios.min()
    ties = positive[ratios <= best + 1e-12 * max(1.0, abs(best))]
    return int(ties[np.argmin(basis[ties])])

def _apply_pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int):
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    T[:, col] = 0.0
    T[row, col] = 1.0
    basis[row] = col

def _run_simplex(T: np.ndarray, basis: np.ndarray, rows: int, columns: int, cost_row: int,
                 budget: int) -> Tuple[str, int]:
    """
    Pivot until the given cost row is optimal

    Returns:
        Tuple[str, int]: (status, iterations used)
    """
    iterations = 0
    streak = 0
    while True:
        col = _pivot_col(T[cost_row], columns, bland=streak >= DEGENERATE_STREAK)
        if col < 0:
            return OPTIMAL, iterations
        row = _pivot_row(T, basis, rows, col)
        if row < 0:
            return UNBOUNDED, iterations
        if iterations >= budget:
            return "iteration_limit", iterations
        streak = streak + 1 if T[row, -1] <= PIVOT_TOL else 0
        _apply_pivot(T, basis, row, col)
        iterations += 1

def _standard_rows(lp: LinearProgram) -> Tuple[List[np.ndarray], List[str], List[float], np.ndarray]:
    """
    Shift variables to y = x - lo and expand bounds and equalities into
    inequality rows
    """
    lower = np.array([lo for lo, _ in lp.bounds()], dtype=float)
    coeffs, relations, rhs = [], [], []
    for row in lp.constraints:
        a = np.asarray(row.coeffs, dtype=float)
        b = float(row.rhs) - float(a @ lower)
        if row.relation == "=":
            coeffs += [a, a]
            relations += ["<=", ">="]
            rhs += [b, b]
        else:
            coeffs.append(a)
            relations.append(row.relation)
            rhs.append(b)
    for k, (lo, hi) in enumerate(lp.bounds()):
        if np.isfinite(hi):
            a = np.zeros(lp.n_vars)
            a[k] = 1.0
            coeffs.append(a)
            relations.append("<=")
            rhs.append(hi - lo)
    return coeffs, relations, rhs, lower

def solve(lp: LinearProgram) -> LpResult:
    """
    Solve a linear program with the two-phase simplex method

    Pivoting uses Dantzig's rule and switches to Bland's rule after a run of
    degenerate pivots, so the result is deterministic and cycling cannot
    occur.

    Args:
        lp: The linear program

    Returns:
        LpResult: Status, solution and objective value
    """
    lp.check()
    n = lp.n_vars
    c = np.asarray(lp.objective, dtype=float)
    coeffs, relations, rhs, lower = _standard_rows(lp)
    m = len(coeffs)

    # flip rows so every rhs is nonnegative
    for k in range(m):
        if rhs[k] < 0.0:
            coeffs[k] = -coeffs[k]
            rhs[k] = -rhs[k]
            relations[k] = ">=" if relations[k] == "<=" else "<="

    n_slack = m
    needs_art = [k for k in range(m) if relations[k] == ">=" and rhs[k] > 0.0]
    n_art = len(needs_art)
    columns = n + n_slack + n_art
    T = np.zeros((m + 2, columns + 1))
    basis = np.zeros(m, dtype=int)
    art_of = {k: n + n_slack + j for j, k in enumerate(needs_art)}
    for k in range(m):
        T[k, :n] = coeffs[k]
        T[k, n + k] = 1.0 if relations[k] == "<=" else -1.0
        T[k, -1] = rhs[k]
        if k in art_of:
            T[k, art_of[k]] = 1.0
            basis[k] = art_of[k]
        elif relations[k] == "<=":
            basis[k] = n + k
        else:
            # ">=" with rhs == 0: negate so the surplus can be basic at 0
            T[k, :-1] = -T[k, :-1]
            basis[k] = n + k

    phase2_row, phase1_row = m, m + 1
    T[phase2_row, :n] = c
    for k in needs_art:
        T[phase1_row, :columns] -= T[k, :columns]
        T[phase1_row, -1] -= T[k, -1]
    for k in needs_art:
        T[phase1_row, art_of[k]] = 0.0

    budget = config.LP_MAX_ITER
    iterations = 0
    if n_art:
        status, used = _run_simplex(T, basis, m, columns, phase1_row, budget)
        iterations += used
        if status == "iteration_limit":
            logger.warning("Simplex phase 1 hit the iteration limit (%d)", budget)
            return LpResult(INFEASIBLE, iterations=iterations)
        if -T[phase1_row, -1] > config.LP_FEAS_TOL:
            return LpResult(INFEASIBLE, iterations=iterations)
        # drive artificial variables out of the basis
        keep = []
        for k in range(m):
            if basis[k] >= n + n_slack:
                candidates = np.nonzero(np.abs(T[k, :n + n_slack]) > PIVOT_TOL)[0]
                if candidates.size:
                    _apply_pivot(T, basis, k, int(candidates[0]))
                    keep.append(k)
            else:
                keep.append(k)
        if len(keep) < m:
            T = np.vstack([T[keep], T[m:]])
            basis = basis[keep]
            m = len(keep)
            phase2_row = m
        T = np.hstack([T[:, :n + n_slack], T[:, -1:]])
        columns = n + n_slack
    T = T[:m + 1]

    status, used = _run_simplex(T, basis, m, columns, phase2_row, budget - iterations)
    iterations += used
    if status == "iteration_limit":
        logger.warning("Simplex phase 2 hit the iteration limit (%d)", budget)
        return LpResult(INFEASIBLE, iterations=iterations)
    if status == UNBOUNDED:
        return LpResult(UNBOUNDED, iterations=iterations)

    y = np.zeros(columns)
    y[basis] = T[:m, -1]
    x = lower + np.maximum(y[:n], 0.0)
    value = float(c @ x)
    violation = lp.max_violation(x)
    if violation > config.ROW_TOL:
        logger.warning("Simplex solution violates a row by %.3g, reporting infeasible", violation)
        return LpResult(INFEASIBLE, iterations=iterations, max_violation=violation)
    return LpResult(OPTIMAL, x, value, iterations, violation)
