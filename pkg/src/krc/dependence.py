"""Dependence coefficients between a finite partition and a random variable.

The pair ``(M, X)`` is given by its joint table ``P(M = omega, X = x)``.
``tau_c`` averages the transport distance between the conditional law of
``X`` given ``M`` and the marginal law of ``X``; with the discrete metric it
is the beta-mixing coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NegativeMass, NotNormalized, ShapeMismatch, SpaceMismatch
from .measures import (
    NEGATIVE_TOL,
    NORMALIZATION_TOL,
    CostMatrix,
    FiniteSpace,
    ProbVec,
    _frozen,
)
from .param import ParamIntegrand, RandomMeasureFamily, map_atoms
from .transport import _require_tight, solve


@dataclass(frozen=True, eq=False)
class JointLaw:
    omega: FiniteSpace
    s: FiniteSpace
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.shape != (self.omega.n, self.s.n):
            raise ShapeMismatch(f"table must be {self.omega.n} x {self.s.n}, got {t.shape}")
        if not np.all(np.isfinite(t)):
            raise NotNormalized("table entries must be finite")
        if np.any(t < -NEGATIVE_TOL):
            raise NegativeMass("joint table has negative entries")
        if abs(t.sum() - 1.0) > NORMALIZATION_TOL:
            raise NotNormalized(f"joint table sums to {t.sum()!r}, not 1")
        object.__setattr__(self, "table", _frozen(t))

    @classmethod
    def product(cls, p: ProbVec, q: ProbVec) -> "JointLaw":
        return cls(p.space, q.space, np.outer(p.mass, q.mass))


@dataclass(frozen=True, eq=False)
class ConditionalSystem:
    weights: ProbVec
    conditionals: RandomMeasureFamily
    marginal: ProbVec

    def marginal_family(self) -> RandomMeasureFamily:
        """The constant family ``omega -> P_X`` with the same weights."""
        omega = self.weights.space
        return RandomMeasureFamily(omega, self.weights, (self.marginal,) * omega.n)


def conditionals(joint: JointLaw) -> ConditionalSystem:
    """Row-normalize the joint table.

    Zero-probability atoms get the marginal as their conditional law, so they
    contribute nothing to any coefficient.
    """
    t = joint.table
    p = t.sum(axis=1)
    marginal = t.sum(axis=0)
    rows = []
    for w in range(joint.omega.n):
        rows.append(ProbVec(joint.s, t[w] / p[w] if p[w] > 0 else marginal))
    weights = ProbVec(joint.omega, p)
    return ConditionalSystem(
        weights,
        RandomMeasureFamily(joint.omega, weights, tuple(rows)),
        ProbVec(joint.s, marginal),
    )


def _check_cost(joint: JointLaw, C: CostMatrix):
    if C.space != joint.s:
        raise SpaceMismatch("cost and joint law use different state spaces")
    _require_tight(C, False)


def _per_atom(joint: JointLaw, C: CostMatrix):
    _check_cost(joint, C)
    cs = conditionals(joint)
    results = map_atoms(lambda m: solve(m, cs.marginal, C), cs.conditionals.margins)
    return cs, results


def tau_c(joint: JointLaw, C: CostMatrix) -> float:
    """``sum_omega p(omega) * KR(P_{X|omega}, P_X)``."""
    cs, results = _per_atom(joint, C)
    return float(sum(w * r.primal_value for w, r in zip(cs.weights.mass, results)))


def optimal_integrand(joint: JointLaw, C: CostMatrix) -> ParamIntegrand:
    _, results = _per_atom(joint, C)
    return ParamIntegrand(np.array([r.potential.f for r in results]))


def tau_c_dual(joint: JointLaw, C: CostMatrix) -> float:
    """``E f(M, X) - E_M E_{X'} f(M, X')`` at the optimal integrand.

    ``X'`` is an independent copy of ``X``; the integrand is assembled from
    the per-atom dual potentials.
    """
    f = optimal_integrand(joint, C).f
    p = joint.table.sum(axis=1)
    marginal = joint.table.sum(axis=0)
    return float(np.sum(joint.table * f) - p @ (f @ marginal))


def beta(joint: JointLaw) -> float:
    """Half the expected variation distance between ``P_{X|M}`` and ``P_X``."""
    t = joint.table
    p = t.sum(axis=1)
    # p(omega) * |P_{X|omega} - P_X| = |t(omega, .) - p(omega) P_X|
    return 0.5 * float(np.abs(t - np.outer(p, t.sum(axis=0))).sum())


@dataclass(frozen=True, eq=False)
class TailQuantile:
    """Generalized inverse of ``t -> P(c(X, x0) > t)``.

    ``values`` are the distinct cost levels carrying positive mass (with 0
    always included), increasing; ``tails[k] = P(c(X, x0) > values[k])``.
    ``Q(u) = values[k]`` on ``[tails[k], tails[k - 1])``.
    """

    values: np.ndarray
    tails: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        object.__setattr__(self, "tails", _frozen(self.tails))

    def __call__(self, u: float) -> float:
        # smallest level whose tail is <= u
        k = int(np.argmax(self.tails <= u))
        return float(self.values[k])

    def integral(self, upper: float) -> float:
        """``int_0^upper Q(u) du`` summed over the steps."""
        total = 0.0
        hi = np.inf
        for v, lo in zip(self.values, self.tails):
            width = max(0.0, min(hi, upper) - lo)
            total += float(v) * width
            hi = float(lo)
        return total


def tail_quantile(joint: JointLaw, C: CostMatrix, x0=0) -> TailQuantile:
    if C.space != joint.s:
        raise SpaceMismatch("cost and joint law use different state spaces")
    k0 = joint.s.index(x0)
    marginal = joint.table.sum(axis=0)
    cost = C.c[:, k0]
    support = marginal > 0
    levels = np.unique(np.concatenate([[0.0], cost[support]]))
    tails = np.array([marginal[support & (cost > t)].sum() for t in levels])
    tails[-1] = 0.0
    return TailQuantile(levels, tails)


@dataclass(frozen=True)
class MPBound:
    x0: int
    tau: float
    beta: float
    quantile_integral: float
    bound: float
    bounded_cost_bound: float
    holds: bool
    bounded_holds: bool


def mp_bound(joint: JointLaw, C: CostMatrix, x0=0, tol: float = 1e-9) -> MPBound:
    """Compare ``tau_c`` with ``2 int_0^beta Q(u) du`` and ``2 max(c) beta``."""
    k0 = joint.s.index(x0)
    tau = tau_c(joint, C)
    b = beta(joint)
    q = tail_quantile(joint, C, k0)
    integral = q.integral(b)
    bound = 2.0 * integral
    crude = 2.0 * float(C.c.max()) * b
    return MPBound(k0, tau, b, integral, bound, crude, bool(tau <= bound + tol), bool(tau <= crude + tol))


def best_mp_bound(joint: JointLaw, C: CostMatrix) -> MPBound:
    """The reference point giving the smallest quantile bound (lowest index on ties)."""
    tau = tau_c(joint, C)
    b = beta(joint)
    crude = 2.0 * float(C.c.max()) * b
    best = None
    for k in range(joint.s.n):
        integral = tail_quantile(joint, C, k).integral(b)
        if best is None or 2.0 * integral < best[1]:
            best = (k, 2.0 * integral, integral)
    k, bound, integral = best
    return MPBound(k, tau, b, integral, bound, crude, bool(tau <= bound + 1e-9), bool(tau <= crude + 1e-9))
