"""Dense two-phase revised simplex.

Solves ``min c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x = b_eq``
and ``lb <= x <= ub``. Pricing is Dantzig's rule; after a run of
degenerate pivots it switches to Bland's rule (lowest index enters,
lowest basic index leaves among ratio ties) so cycling cannot occur.
Meant for small and medium models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


@dataclass
class SimplexResult:
    status: str
    x: np.ndarray | None
    fun: float | None
    iterations: int


class _StandardForm:
    """Map bounded variables to ``x' >= 0`` columns and back."""

    def __init__(self, c, A_ub, b_ub, A_eq, b_eq, lb, ub):
        n = c.size
        cols = []  # (orig index, sign) per standard column
        shift = np.zeros(n)
        extra_rows = []
        for j in range(n):
            lo, hi = lb[j], ub[j]
            if np.isfinite(lo):
                shift[j] = lo
                cols.append((j, 1.0))
                if np.isfinite(hi):
                    extra_rows.append((len(cols) - 1, hi - lo))
            elif np.isfinite(hi):
                shift[j] = hi
                cols.append((j, -1.0))
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        self.n_orig = n
        self.cols = cols
        self.shift = shift
        m_cols = len(cols)
        T = np.zeros((n, m_cols))
        for k, (j, s) in enumerate(cols):
            T[j, k] = s
        self.T = T
        self.c = T.T @ c
        self.offset = float(c @ shift)
        ub_rows = A_ub @ T if A_ub.size else np.zeros((0, m_cols))
        ub_rhs = b_ub - (A_ub @ shift if A_ub.size else 0.0)
        bound_rows = np.zeros((len(extra_rows), m_cols))
        bound_rhs = np.zeros(len(extra_rows))
        for r, (k, width) in enumerate(extra_rows):
            bound_rows[r, k] = 1.0
            bound_rhs[r] = width
        self.A_ub = np.vstack([ub_rows, bound_rows])
        self.b_ub = np.concatenate([np.atleast_1d(ub_rhs), bound_rhs])
        self.A_eq = A_eq @ T if A_eq.size else np.zeros((0, m_cols))
        self.b_eq = b_eq - (A_eq @ shift if A_eq.size else 0.0)

    def recover(self, xs: np.ndarray) -> np.ndarray:
        return self.T @ xs + self.shift


def _revised_simplex(A, b, c, basis, max_iter, tol, bland_after, allowed=None):
    """Minimize ``c @ x`` over ``A x = b, x >= 0`` from a feasible ``basis``.

    ``allowed`` masks columns that may enter. Returns (status, x, basis, iters).
    """
    m, n = A.shape
    basis = list(basis)
    degenerate_run = 0
    for it in range(max_iter):
        B = A[:, basis]
        try:
            x_b = np.linalg.solve(B, b)
            duals = np.linalg.solve(B.T, c[basis])
        except np.linalg.LinAlgError:
            raise RuntimeError("singular basis encountered in simplex")
        reduced = c - A.T @ duals
        reduced[basis] = 0.0
        if allowed is not None:
            reduced = np.where(allowed, reduced, 0.0)
        candidates = np.flatnonzero(reduced < -tol)
        if candidates.size == 0:
            x = np.zeros(n)
            x[basis] = x_b
            return OPTIMAL, x, basis, it
        use_bland = degenerate_run >= bland_after
        if use_bland:
            enter = int(candidates[0])
        else:
            enter = int(candidates[np.argmin(reduced[candidates])])
        direction = np.linalg.solve(B, A[:, enter])
        pos = direction > tol
        if not np.any(pos):
            return UNBOUNDED, None, basis, it
        ratios = np.full(m, np.inf)
        ratios[pos] = np.maximum(x_b[pos], 0.0) / direction[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
        leave_row = int(min(ties, key=lambda r: basis[r]))
        degenerate_run = degenerate_run + 1 if best <= tol else 0
        basis[leave_row] = enter
    return ITERATION_LIMIT, None, basis, max_iter


def solve(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    lb=None,
    ub=None,
    max_iter: int = 50_000,
    tol: float = 1e-9,
    bland_after: int = 50,
) -> SimplexResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    lb = np.zeros(n) if lb is None else np.asarray(lb, dtype=float)
    ub = np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=float)
    if np.any(lb > ub):
        return SimplexResult(INFEASIBLE, None, None, 0)

    sf = _StandardForm(c, A_ub, b_ub, A_eq, b_eq, lb, ub)
    m_ub, m_eq = sf.A_ub.shape[0], sf.A_eq.shape[0]
    n_s = sf.c.size
    m = m_ub + m_eq
    # Columns: structural | slacks (one per <= row) | artificials (one per row).
    A = np.zeros((m, n_s + m_ub + m))
    A[:m_ub, :n_s] = sf.A_ub
    A[m_ub:, :n_s] = sf.A_eq
    A[:m_ub, n_s:n_s + m_ub] = np.eye(m_ub)
    b = np.concatenate([sf.b_ub, sf.b_eq])
    neg = b < 0
    A[neg] *= -1.0
    b = np.abs(b)
    art0 = n_s + m_ub
    basis = []
    for r in range(m):
        if r < m_ub and not neg[r]:
            basis.append(n_s + r)
        else:
            basis.append(art0 + r)
            A[r, art0 + r] = 1.0
    uses_art = [r for r in range(m) if basis[r] >= art0]
    total_iters = 0

    if uses_art:
        c1 = np.zeros(A.shape[1])
        c1[[art0 + r for r in uses_art]] = 1.0
        status, x, basis, it = _revised_simplex(A, b, c1, basis, max_iter, tol, bland_after)
        total_iters += it
        if status != OPTIMAL:
            return SimplexResult(status if status == ITERATION_LIMIT else INFEASIBLE, None, None, total_iters)
        if c1 @ x > 1e-7 * max(1.0, np.abs(b).max(initial=0.0)):
            return SimplexResult(INFEASIBLE, None, None, total_iters)
        # Pivot zero-level artificials out where a real column can replace them.
        keep_rows = list(range(m))
        for r in range(m):
            if basis[r] < art0:
                continue
            B = A[:, basis]
            row = np.linalg.solve(B.T, np.eye(m)[r]) @ A[:, :art0]
            swap = next((j for j in range(art0) if j not in basis and abs(row[j]) > 1e-9), None)
            if swap is not None:
                basis[r] = swap
            else:
                keep_rows.remove(r)  # redundant constraint
        if len(keep_rows) < m:
            A = A[keep_rows]
            b = b[keep_rows]
            basis = [basis[r] for r in keep_rows]
            m = len(keep_rows)
    allowed = np.zeros(A.shape[1], dtype=bool)
    allowed[:art0] = True
    c2 = np.zeros(A.shape[1])
    c2[:n_s] = sf.c
    status, x, basis, it = _revised_simplex(A, b, c2, basis, max_iter, tol, bland_after, allowed)
    total_iters += it
    if status != OPTIMAL:
        return SimplexResult(status, None, None, total_iters)
    x_orig = sf.recover(x[:n_s])
    return SimplexResult(OPTIMAL, x_orig, float(c @ x_orig), total_iters)
