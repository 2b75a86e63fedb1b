"""Flow assignment: linearized LP assembly and the convex-concave procedure.

The nonconvex problem maximizes

    omega * F_d1(d) + (1 - omega) * F_d2(1 - n' / dn_max)

over route flows ``z`` under flow conservation, capacities, the energy
budget and noise caps, where ``n`` is the log-energy community noise. Each
CCP step replaces ``n`` by its tangent at the previous link flows (an
upper bound, since ``n`` is concave) and solves the resulting LP.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from . import simplex
from .energy import average_extra_energy
from .exposure import cumulative_noise, noise_increase
from .network import IncidenceMatrices
from .welfare import fairness_threshold_swf, gini

log = logging.getLogger(__name__)

DB_PER_NEPER = 10.0 / math.log(10.0)
VARIABLE_BLOCKS = ("y", "z", "d", "w", "u", "d_min", "v", "s_min")


class Status(str, enum.Enum):
    Converged = "Converged"
    IterationCap = "IterationCap"
    Infeasible = "Infeasible"


class LpStatus(str, enum.Enum):
    Optimal = "Optimal"
    Infeasible = "Infeasible"
    Unbounded = "Unbounded"


class LpBackendError(RuntimeError):
    pass


class CCPMonotonicityError(RuntimeError):
    pass


@dataclass
class ProblemSpec:
    mats: IncidenceMatrices
    M: np.ndarray
    ambient: np.ndarray
    demand: np.ndarray
    c_v: np.ndarray
    c_l: np.ndarray
    c_w: np.ndarray
    p: np.ndarray
    omega: float = 0.5
    delta1: float = 0.5
    delta2: float = 0.5
    delta_n_max: float = 25.0
    m_u: float = math.inf
    p_u: float = math.inf
    epsilon: float = 0.0
    T: float = 3600.0

    def __post_init__(self):
        for name in ("M", "ambient", "demand", "c_v", "c_l", "c_w", "p"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        problems = self.problems()
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def n_l(self) -> int:
        return self.mats.F.shape[0]

    @property
    def n_r(self) -> int:
        return self.mats.F.shape[1]

    @property
    def n_o(self) -> int:
        return self.mats.H.shape[0]

    @property
    def n_c(self) -> int:
        return self.M.shape[1]

    @property
    def n_n(self) -> int:
        return self.mats.E.shape[0]

    @property
    def n_v(self) -> int:
        return self.mats.J.shape[0]

    def problems(self) -> list[str]:
        m = self.mats
        out = []
        n_l, n_r = m.F.shape
        expect = {
            "E": (m.E.shape, (m.E.shape[0], n_l)),
            "K": (m.K.shape, m.E.shape),
            "H": (m.H.shape, (m.H.shape[0], n_r)),
            "J": (m.J.shape, (m.J.shape[0], n_r)),
            "M": (self.M.shape[:1], (n_l,)),
            "ambient": (self.ambient.shape, (self.M.shape[1],) if self.M.ndim == 2 else None),
            "demand": (self.demand.shape, (m.H.shape[0],)),
            "c_v": (self.c_v.shape, (m.J.shape[0],)),
            "c_l": (self.c_l.shape, (n_l,)),
            "c_w": (self.c_w.shape, (m.E.shape[0],)),
            "p": (self.p.shape, (n_r,)),
        }
        for name, (got, want) in expect.items():
            if got != want:
                out.append(f"{name}: shape {got}, expected {want}")
        if self.M.ndim != 2:
            out.append("M must be two-dimensional")
        if np.any(self.M < 0):
            out.append("M has negative entries")
        if np.any(self.demand <= 0):
            out.append("demand must be positive")
        if not 0 <= self.omega <= 1:
            out.append(f"omega must be in [0, 1], got {self.omega}")
        if self.delta1 < 0 or self.delta2 < 0:
            out.append("fairness thresholds must be >= 0")
        if not self.delta_n_max > 0:
            out.append("delta_n_max must be positive")
        if self.m_u < 0 or self.p_u < 0:
            out.append("m_u and p_u must be >= 0")
        if not 0 <= self.epsilon <= 1:
            out.append("epsilon must be in [0, 1]")
        if not self.T > 0:
            out.append("T must be positive")
        return out

    def with_params(self, **kwargs) -> "ProblemSpec":
        return replace(self, **kwargs)

    def ambient_energy(self) -> np.ndarray:
        """Community energy at which the cumulative level equals ambient."""
        return self.T * 10.0 ** (self.ambient / 10.0)


# --------------------------------------------------------------------------
# linearization


def linearize_noise(M, y_hat, T: float = 3600.0, floor_energy=None):
    """Tangent ``n(y) <= A (y - y_hat) + b`` of the concave community noise.

    The tangent is taken at community energy ``max(M.T @ y_hat, floor)``,
    so rows stay finite where ``y_hat`` carries no energy; a tangent of a
    concave function bounds it from above everywhere, so the floored row
    is still a valid over-estimate. Without a floor, ``b`` is the exact
    noise at ``y_hat``. Communities whose column of ``M`` is all zero get
    zero rows and ``b = nan`` (they can never hear anything).
    """
    M = np.asarray(M, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    s = M.T @ y_hat
    if floor_energy is None:
        s_f = s.copy()
    else:
        s_f = np.maximum(s, np.asarray(floor_energy, dtype=float))
    audible = M.any(axis=0)
    if np.any(audible & (s_f <= 0)):
        raise ValueError("zero community energy at the linearization point; pass floor_energy")
    A = np.zeros((M.shape[1], M.shape[0]))
    b = np.full(M.shape[1], np.nan)
    idx = np.flatnonzero(audible)
    slope = DB_PER_NEPER / s_f[idx]
    A[idx] = slope[:, None] * M[:, idx].T
    b[idx] = 10.0 * np.log10(s_f[idx]) - 10.0 * math.log10(T) + slope * (s[idx] - s_f[idx])
    return A, b


# --------------------------------------------------------------------------
# LP model


@dataclass
class LpModel:
    """``maximize c @ x`` with ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``lb <= x <= ub``."""

    c: np.ndarray
    A_ub: sp.csr_matrix
    b_ub: np.ndarray
    A_eq: sp.csr_matrix
    b_eq: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    index: dict[str, slice]
    ub_rows: dict[str, slice] = field(default_factory=dict)
    eq_rows: dict[str, slice] = field(default_factory=dict)
    constant: float = 0.0

    @property
    def n_vars(self) -> int:
        return self.c.size

    def split(self, x: np.ndarray) -> dict[str, np.ndarray]:
        return {name: x[sl] for name, sl in self.index.items()}


class _RowBuilder:
    def __init__(self, index: dict[str, slice], n_vars: int):
        self.index = index
        self.n = n_vars
        self.blocks: list[sp.spmatrix] = []
        self.rhs: list[np.ndarray] = []
        self.labels: dict[str, slice] = {}
        self.count = 0

    def add(self, label: str, terms: dict[str, np.ndarray], rhs) -> None:
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        m = rhs.size
        if m == 0:
            return
        rows, cols, vals = [], [], []
        for name, coef in terms.items():
            sl = self.index[name]
            block = sp.coo_matrix(np.asarray(coef, dtype=float).reshape(m, sl.stop - sl.start))
            rows.append(block.row)
            cols.append(block.col + sl.start)
            vals.append(block.data)
        mat = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, self.n)
        )
        self.blocks.append(mat)
        self.rhs.append(rhs)
        self.labels[label] = slice(self.count, self.count + m)
        self.count += m

    def build(self):
        if not self.blocks:
            return sp.csr_matrix((0, self.n)), np.zeros(0)
        return sp.vstack(self.blocks).tocsr(), np.concatenate(self.rhs)


def assemble_lp(spec: ProblemSpec, y_hat: np.ndarray, linearization=None) -> LpModel:
    """Approximating LP around link flows ``y_hat``.

    ``linearization`` is an ``(A, b)`` pair from ``linearize_noise``; when
    omitted it is computed with the ambient-energy floor.
    """
    if linearization is None:
        linearization = linearize_noise(spec.M, y_hat, spec.T, spec.ambient_energy())
    A_lin, b_lin = linearization
    m = spec.mats
    n_l, n_r, n_o, n_c = spec.n_l, spec.n_r, spec.n_o, spec.n_c
    sizes = dict(y=n_l, z=n_r, d=n_o, w=n_c, u=n_o, d_min=1, v=n_c, s_min=1)
    index, pos = {}, 0
    for name in VARIABLE_BLOCKS:
        index[name] = slice(pos, pos + sizes[name])
        pos += sizes[name]
    Y, Z, D, W, U, DMIN, V, SMIN = (index[k] for k in VARIABLE_BLOCKS)
    n_vars = pos
    scale = 1.0 - spec.epsilon
    I_o, I_c = np.eye(n_o), np.eye(n_c)
    # Both utility vectors live in [0, 1], where any threshold >= 1 already
    # gives the plain mean; capping keeps infinite thresholds finite.
    delta1 = min(spec.delta1, 1.0)
    delta2 = min(spec.delta2, 1.0)

    eq = _RowBuilder(index, n_vars)
    eq.add("flow_conservation", {"y": m.E}, np.zeros(m.E.shape[0]))
    eq.add("link_route", {"z": m.F, "y": -np.eye(n_l)}, np.zeros(n_l))
    eq.add("demand_definition", {"d": I_o, "z": -(m.H / spec.demand[:, None])}, np.zeros(n_o))

    ub = _RowBuilder(index, n_vars)
    finite_cv = np.isfinite(spec.c_v)
    ub.add("vertiport_capacity", {"z": m.J[finite_cv]}, scale * spec.c_v[finite_cv])
    finite_cw = np.isfinite(spec.c_w)
    ub.add("waypoint_capacity", {"y": m.K[finite_cw]}, scale * spec.c_w[finite_cw])
    audible = np.flatnonzero(~np.isnan(b_lin))
    if audible.size:
        # w >= A (y - y_hat) + b - a
        rhs = A_lin[audible] @ y_hat - b_lin[audible] + spec.ambient[audible]
        w_sel = -np.eye(n_c)[audible]
        ub.add("noise_linearization", {"y": A_lin[audible], "w": w_sel}, rhs)
    if math.isfinite(spec.m_u):
        ub.add("mean_noise", {"w": np.full((1, n_c), 1.0 / n_c)}, [spec.m_u])
    if math.isfinite(spec.p_u):
        ub.add("energy", {"z": (spec.p - spec.p_u)[None, :]}, [0.0])
    ub.add("u_threshold", {"u": I_o, "d": -I_o}, np.full(n_o, -delta1))
    ub.add("u_min", {"u": I_o, "d_min": -np.ones((n_o, 1))}, np.zeros(n_o))
    ub.add("d_min", {"d_min": np.ones((n_o, 1)), "d": -I_o}, np.zeros(n_o))
    inv = 1.0 / spec.delta_n_max
    ub.add("v_threshold", {"v": I_c, "w": inv * I_c}, np.full(n_c, 1.0 - delta2))
    ub.add("v_min", {"v": I_c, "s_min": -np.ones((n_c, 1))}, np.zeros(n_c))
    ub.add("s_min", {"s_min": np.ones((n_c, 1)), "w": inv * I_c}, np.ones(n_c))

    lb = np.full(n_vars, -np.inf)
    hi = np.full(n_vars, np.inf)
    lb[Y] = 0.0
    hi[Y] = scale * spec.c_l
    lb[Z] = 0.0
    lb[D] = 0.0
    hi[D] = 1.0
    lb[W] = 0.0
    hi[W] = spec.delta_n_max

    c = np.zeros(n_vars)
    c[U] = spec.omega / n_o
    c[V] = (1.0 - spec.omega) / n_c
    A_ub, b_ub = ub.build()
    A_eq, b_eq = eq.build()
    return LpModel(
        c=c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, lb=lb, ub=hi, index=index,
        ub_rows=ub.labels, eq_rows=eq.labels,
        constant=spec.omega * delta1 + (1.0 - spec.omega) * delta2,
    )


@dataclass
class LpResult:
    status: LpStatus
    x: np.ndarray | None
    objective: float | None
    message: str = ""


BACKENDS = ("highs", "simplex")


def solve_lp(model: LpModel, backend: str = "highs") -> LpResult:
    """Maximize the model; ``objective`` excludes ``model.constant``."""
    bounds = np.column_stack([model.lb, model.ub])
    if backend == "highs":
        res = linprog(
            -model.c,
            A_ub=model.A_ub if model.A_ub.shape[0] else None,
            b_ub=model.b_ub if model.A_ub.shape[0] else None,
            A_eq=model.A_eq if model.A_eq.shape[0] else None,
            b_eq=model.b_eq if model.A_eq.shape[0] else None,
            bounds=[(None if not np.isfinite(lo) else lo, None if not np.isfinite(hi) else hi)
                    for lo, hi in bounds],
            method="highs",
        )
        if res.status == 0:
            return LpResult(LpStatus.Optimal, res.x, float(model.c @ res.x), res.message)
        if res.status == 2:
            return LpResult(LpStatus.Infeasible, None, None, res.message)
        if res.status == 3:
            return LpResult(LpStatus.Unbounded, None, None, res.message)
        raise LpBackendError(
            f"HiGHS failed ({res.status}: {res.message}) on a model with "
            f"{model.n_vars} variables, {model.A_ub.shape[0]} inequality and "
            f"{model.A_eq.shape[0]} equality rows"
        )
    if backend == "simplex":
        try:
            res = simplex.solve(
                -model.c,
                model.A_ub.toarray(), model.b_ub,
                model.A_eq.toarray(), model.b_eq,
                model.lb, model.ub,
            )
        except (RuntimeError, np.linalg.LinAlgError) as exc:
            raise LpBackendError(f"simplex failed on a model with {model.n_vars} variables: {exc}") from exc
        if res.status == simplex.OPTIMAL:
            return LpResult(LpStatus.Optimal, res.x, float(model.c @ res.x), f"{res.iterations} pivots")
        if res.status == simplex.INFEASIBLE:
            return LpResult(LpStatus.Infeasible, None, None)
        if res.status == simplex.UNBOUNDED:
            return LpResult(LpStatus.Unbounded, None, None)
        raise LpBackendError(f"simplex hit its iteration limit after {res.iterations} pivots")
    raise ValueError(f"unknown LP backend {backend!r}; choose from {BACKENDS}")


# --------------------------------------------------------------------------
# evaluation and CCP


@dataclass
class Metrics:
    y: np.ndarray
    z: np.ndarray
    d: np.ndarray
    n: np.ndarray
    n_inc: np.ndarray
    p_a: float
    gini_d: float
    gini_n: float
    mean_d: float
    mean_n: float
    objective: float


def true_objective(spec: ProblemSpec, d: np.ndarray, n_inc: np.ndarray) -> float:
    noise_util = 1.0 - np.asarray(n_inc) / spec.delta_n_max
    return (spec.omega * fairness_threshold_swf(d, spec.delta1)
            + (1.0 - spec.omega) * fairness_threshold_swf(noise_util, spec.delta2))


def evaluate_solution(spec: ProblemSpec, z: np.ndarray) -> Metrics:
    """Exact outcome of route flows ``z``; tiny negative entries are clipped."""
    z = np.maximum(np.asarray(z, dtype=float), 0.0)
    y = spec.mats.F @ z
    d = spec.mats.H @ z / spec.demand
    n = cumulative_noise(spec.M, y, spec.T)
    n_inc = noise_increase(n, spec.ambient)
    return Metrics(
        y=y, z=z, d=d, n=n, n_inc=n_inc,
        p_a=average_extra_energy(spec.p, z),
        gini_d=gini(d),
        gini_n=gini(n_inc),
        mean_d=float(d.mean()),
        mean_n=float(n_inc.mean()),
        objective=true_objective(spec, d, n_inc),
    )


@dataclass
class Iterate:
    lp_objective: float
    true_objective: float
    max_increase: float
    mean_increase: float
    within_caps: bool = True


# Callables ``f(spec, iterate)`` invoked after every CCP iteration.
iterate_observers: list = []
CAP_TOL = 1e-6


def within_noise_caps(spec: ProblemSpec, max_increase: float, mean_increase: float, tol: float = CAP_TOL) -> bool:
    ok = max_increase <= spec.delta_n_max + tol
    if math.isfinite(spec.m_u):
        ok = ok and mean_increase <= spec.m_u + tol
    return ok


@dataclass
class Solution:
    status: Status
    y: np.ndarray | None = None
    z: np.ndarray | None = None
    d: np.ndarray | None = None
    n: np.ndarray | None = None
    n_inc: np.ndarray | None = None
    p_a: float | None = None
    objective: float | None = None
    metrics: Metrics | None = None
    trace: list[Iterate] = field(default_factory=list)
    message: str = ""

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def ccp_trace(self) -> list[float]:
        return [it.true_objective for it in self.trace]

    @property
    def lp_trace(self) -> list[float]:
        return [it.lp_objective for it in self.trace]


def default_start(spec: ProblemSpec, flow: float = 0.01) -> np.ndarray:
    return np.full(spec.n_l, flow)


def ccp_solve(
    spec: ProblemSpec,
    y0: np.ndarray | None = None,
    tol: float = 1e-4,
    max_iter: int = 50,
    backend: str = "highs",
    monotone_tol: float = 1e-6,
) -> Solution:
    """Iterate linearize / solve LP until the LP objective settles.

    Raises ``CCPMonotonicityError`` if an LP objective drops by more than
    ``monotone_tol`` between iterations.
    """
    y_hat = default_start(spec) if y0 is None else np.asarray(y0, dtype=float)
    floor = spec.ambient_energy()
    trace: list[Iterate] = []
    f_prev = -math.inf
    best_z = None
    status = Status.IterationCap
    for k in range(max_iter):
        model = assemble_lp(spec, y_hat, linearize_noise(spec.M, y_hat, spec.T, floor))
        res = solve_lp(model, backend)
        if res.status is not LpStatus.Optimal:
            return Solution(
                status=Status.Infeasible, trace=trace,
                message=f"iteration {k + 1}: LP {res.status.value.lower()} ({res.message})",
            )
        parts = model.split(res.x)
        f = res.objective + model.constant
        z = np.maximum(parts["z"], 0.0)
        metrics = evaluate_solution(spec, z)
        it = Iterate(
            lp_objective=f,
            true_objective=metrics.objective,
            max_increase=float(metrics.n_inc.max(initial=0.0)),
            mean_increase=metrics.mean_n,
        )
        it.within_caps = within_noise_caps(spec, it.max_increase, it.mean_increase)
        if not it.within_caps:
            log.warning("iteration %d exceeds a noise cap (max %.6f dB, mean %.6f dB)",
                        k + 1, it.max_increase, it.mean_increase)
        trace.append(it)
        for observer in iterate_observers:
            observer(spec, it)
        if f < f_prev - monotone_tol * max(1.0, abs(f_prev)):
            raise CCPMonotonicityError(f"LP objective fell from {f_prev} to {f} at iteration {k + 1}")
        best_z = z
        y_hat = np.maximum(parts["y"], 0.0)
        if abs(f - f_prev) <= tol:
            status = Status.Converged
            break
        f_prev = f
    metrics = evaluate_solution(spec, best_z)
    log.debug("CCP %s after %d iterations, objective %.6f", status.value, len(trace), metrics.objective)
    return Solution(
        status=status, y=metrics.y, z=metrics.z, d=metrics.d, n=metrics.n, n_inc=metrics.n_inc,
        p_a=metrics.p_a, objective=metrics.objective, metrics=metrics, trace=trace,
    )
