"""Exact Kantorovich-Rubinstein transport on a finite space.

The primal problem is solved as a min-cost flow on the complete bipartite
graph (rows = first margin, columns = second margin) by successive shortest
augmenting paths with node potentials.  The final column potentials are a
feasible dual for the transportation LP; their c-transform is a c-Lipschitz
potential whose value matches the primal one whenever the cost is tight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DualityGapExceeded, NumericalFailure, SpaceMismatch, UntightCost
from .measures import (
    CostMatrix,
    DualPotential,
    FiniteSpace,
    ProbVec,
    _frozen,
    _same_space,
    hahn_decompose,
)

GAP_TOL = 1e-9
MARGIN_TOL = 1e-9
# masses at or below this are treated as exhausted during augmentation
_EXHAUSTED = 1e-15


@dataclass(frozen=True, eq=False)
class CouplingPlan:
    row_space: FiniteSpace
    col_space: FiniteSpace
    pi: np.ndarray
    value: float | None = None

    def __post_init__(self):
        pi = np.array(self.pi, dtype=float)
        pi[pi < 0] = 0.0
        object.__setattr__(self, "pi", _frozen(pi))

    def cost(self, C: CostMatrix) -> float:
        return float(np.sum(C.c * self.pi))

    def margin_residuals(self, mu: ProbVec, nu: ProbVec) -> tuple[float, float]:
        """Max-abs deviation of row and column sums from ``mu`` and ``nu``."""
        return (
            float(np.max(np.abs(self.pi.sum(axis=1) - mu.mass))),
            float(np.max(np.abs(self.pi.sum(axis=0) - nu.mass))),
        )

    def off_diagonal_mass(self) -> float:
        return float(self.pi.sum() - np.trace(self.pi))


@dataclass(frozen=True, eq=False)
class TransportResult:
    plan: CouplingPlan
    primal_value: float
    potential: DualPotential
    dual_value: float
    gap: float


def _shortest_augmenting_paths(a: np.ndarray, b: np.ndarray, c: np.ndarray):
    """Min-cost transport of ``a`` onto ``b`` under ``c``.

    Returns ``(flow, col_potential)``.  Reduced costs
    ``c[i, j] + row_pot[i] - col_pot[j]`` stay nonnegative throughout and
    vanish on arcs carrying flow.  Ties in Dijkstra go to the lowest index,
    columns before rows, so the output is a deterministic function of the
    input.
    """
    n, m = c.shape
    supply = np.where(a > _EXHAUSTED, a, 0.0)
    demand = np.where(b > _EXHAUSTED, b, 0.0)
    flow = np.zeros((n, m))
    row_pot = np.zeros(n)
    col_pot = np.zeros(m)
    inf = np.inf

    # every augmentation exhausts a supply, a demand or a reverse arc
    max_iter = 50 * (n + m) * (n + m) + 100
    for _ in range(max_iter):
        if not (supply > 0).any() or not (demand > 0).any():
            break
        rc = c + row_pot[:, None] - col_pot[None, :]
        np.maximum(rc, 0.0, out=rc)

        d_row = np.where(supply > 0, 0.0, inf)
        d_col = np.full(m, inf)
        pred_row = np.full(n, -1)
        pred_col = np.full(m, -1)
        # tentative labels of unsettled nodes; settled entries are inf
        work_row = d_row.copy()
        work_col = d_col.copy()
        open_row = np.ones(n, dtype=bool)
        open_col = np.ones(m, dtype=bool)

        while True:
            i = int(work_row.argmin())
            j = int(work_col.argmin())
            if work_col[j] <= work_row[i]:
                dj = work_col[j]
                if dj == inf:
                    raise NumericalFailure("no augmenting path to an unmet demand")
                open_col[j] = False
                work_col[j] = inf
                if demand[j] > 0:
                    sink, dist = j, dj
                    break
                # reverse arcs carry flow, so their reduced cost is zero
                better = open_row & (flow[:, j] > 0) & (dj < d_row)
                d_row[better] = dj
                work_row[better] = dj
                pred_row[better] = j
            else:
                di = work_row[i]
                open_row[i] = False
                work_row[i] = inf
                nd = di + rc[i]
                better = open_col & (nd < d_col)
                d_col[better] = nd[better]
                work_col[better] = nd[better]
                pred_col[better] = i

        # walk back from the sink, collecting the bottleneck
        forward = []
        backward = []
        j = sink
        while True:
            i = int(pred_col[j])
            forward.append((i, j))
            jj = int(pred_row[i])
            if jj < 0:
                source = i
                break
            backward.append((i, jj))
            j = jj
        delta = min(supply[source], demand[sink])
        for i, jj in backward:
            delta = min(delta, flow[i, jj])
        if delta <= 0:
            raise NumericalFailure("degenerate augmenting path")

        for i, j in forward:
            flow[i, j] += delta
        for i, jj in backward:
            left = flow[i, jj] - delta
            flow[i, jj] = left if left > _EXHAUSTED else 0.0
        s_left = supply[source] - delta
        supply[source] = s_left if s_left > _EXHAUSTED else 0.0
        d_left = demand[sink] - delta
        demand[sink] = d_left if d_left > _EXHAUSTED else 0.0

        row_pot += np.minimum(d_row, dist)
        col_pot += np.minimum(d_col, dist)
    else:
        raise NumericalFailure("augmenting-path solver did not terminate")
    return flow, col_pot


def _c_transform(col_pot: np.ndarray, closure: np.ndarray) -> np.ndarray:
    # f(x) = min_j closure(x, j) - col_pot[j] is Lipschitz for the closure
    f = np.min(closure - col_pot[None, :], axis=1)
    return f - f.min()


def _check_spaces(mu: ProbVec, nu: ProbVec, C: CostMatrix) -> FiniteSpace:
    space = _same_space(mu, nu)
    if C.space != space:
        raise SpaceMismatch("cost and measures live on different spaces")
    return space


def _require_tight(C: CostMatrix, allow_untight: bool):
    if not allow_untight and not C.tight:
        _, (i, j), gap = C.tightness
        raise UntightCost(
            f"cost exceeds its path closure by {gap:.6g} at "
            f"({C.space.labels[i]!r}, {C.space.labels[j]!r})"
        )


def _plan(mu: ProbVec, nu: ProbVec, C: CostMatrix) -> tuple[CouplingPlan, np.ndarray]:
    flow, col_pot = _shortest_augmenting_paths(mu.mass, nu.mass, C.c)
    plan = CouplingPlan(mu.space, nu.space, flow)
    plan = CouplingPlan(mu.space, nu.space, plan.pi, plan.cost(C))
    return plan, col_pot


def solve_primal(mu: ProbVec, nu: ProbVec, C: CostMatrix, allow_untight: bool = False) -> CouplingPlan:
    """Optimal coupling of ``mu`` and ``nu`` for the cost ``C``."""
    _check_spaces(mu, nu, C)
    _require_tight(C, allow_untight)
    return _plan(mu, nu, C)[0]


def solve_dual(mu: ProbVec, nu: ProbVec, C: CostMatrix, allow_untight: bool = False) -> tuple[DualPotential, float]:
    """Maximizer of ``mu(f) - nu(f)`` over c-Lipschitz ``f``, with ``min f = 0``.

    For an untight cost (only with ``allow_untight``) the Lipschitz class is
    that of the path closure, so the potential is computed from it.
    """
    space = _check_spaces(mu, nu, C)
    _require_tight(C, allow_untight)
    _, col_pot = _shortest_augmenting_paths(mu.mass, nu.mass, C.closure)
    f = _c_transform(col_pot, C.closure)
    return DualPotential(space, f), mu.integrate(f) - nu.integrate(f)


def solve(mu: ProbVec, nu: ProbVec, C: CostMatrix, allow_untight: bool = False) -> TransportResult:
    """Primal plan and dual potential, with the duality gap certified."""
    space = _check_spaces(mu, nu, C)
    _require_tight(C, allow_untight)
    plan, col_pot = _plan(mu, nu, C)
    if C.tight:
        f = _c_transform(col_pot, C.closure)
        potential, dual = DualPotential(space, f), mu.integrate(f) - nu.integrate(f)
    else:
        potential, dual = solve_dual(mu, nu, C, allow_untight=True)
    gap = plan.value - dual
    if abs(gap) > GAP_TOL:
        raise DualityGapExceeded(f"primal {plan.value!r} vs dual {dual!r} (gap {gap:.3g})")
    return TransportResult(plan, plan.value, potential, dual, gap)


def dobrushin_plan(mu: ProbVec, nu: ProbVec) -> CouplingPlan:
    """Explicit maximal coupling for the discrete metric.

    Keeps ``min(mu, nu)`` on the diagonal and spreads the excess of ``mu``
    over the excess of ``nu`` proportionally.
    """
    space = _same_space(mu, nu)
    h = hahn_decompose(mu, nu)
    pi = np.diag(mu.mass - h.pi_plus)
    if h.total_plus > 0:
        pi = pi + np.outer(h.pi_plus, h.pi_minus) / h.total_plus
    plan = CouplingPlan(space, space, pi)
    return CouplingPlan(space, space, plan.pi, plan.off_diagonal_mass())
