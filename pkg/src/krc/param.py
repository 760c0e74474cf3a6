"""Transport between random measures on a finite parameter space.

A random measure is a family ``omega -> mu_omega`` together with a weight
law on the atoms.  Solving each atom with the deterministic kernel solver
gives a selection ``omega -> plan_omega``; measurability is automatic on a
finite parameter space, so what remains of the selection argument is that
the choice is reproducible.  Gluing the plans with the weights yields a
joint law on ``Omega x S x S`` whose expected cost equals both the averaged
primal value and the averaged dual value.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ShapeMismatch, SpaceMismatch, WeightMismatch
from .measures import (
    NORMALIZATION_TOL,
    CostMatrix,
    FiniteSpace,
    ProbVec,
    _frozen,
    lipschitz_check,
    validate_prob,
)
from .transport import CouplingPlan, _require_tight, solve, solve_primal


def thread_count() -> int:
    """Worker cap from ``KRC_THREADS`` (default 1: run serially)."""
    try:
        return max(1, int(os.environ.get("KRC_THREADS", "1")))
    except ValueError:
        return 1


def map_atoms(fn: Callable, items: Sequence) -> list:
    """Apply ``fn`` to every item; output order is the input order."""
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True, eq=False)
class RandomMeasureFamily:
    omega: FiniteSpace
    weights: ProbVec
    margins: tuple[ProbVec, ...]

    def __post_init__(self):
        margins = tuple(self.margins)
        if self.weights.space != self.omega:
            raise SpaceMismatch("weights must live on the parameter space")
        if len(margins) != self.omega.n:
            raise ShapeMismatch(f"{self.omega.n} atoms but {len(margins)} margins")
        if any(m.space != margins[0].space for m in margins):
            raise SpaceMismatch("all margins must share one space")
        object.__setattr__(self, "margins", margins)

    @classmethod
    def from_arrays(cls, omega: FiniteSpace, space: FiniteSpace, weights, margins) -> "RandomMeasureFamily":
        w = validate_prob(weights, omega)
        rows = np.asarray(margins, dtype=float)
        if rows.ndim != 2 or rows.shape[0] != omega.n:
            raise ShapeMismatch(f"margins must be {omega.n} x {space.n}, got {rows.shape}")
        return cls(omega, w, tuple(validate_prob(r, space) for r in rows))

    @property
    def space(self) -> FiniteSpace:
        return self.margins[0].space

    def matrix(self) -> np.ndarray:
        return np.array([m.mass for m in self.margins])

    def mean(self) -> np.ndarray:
        """The mixture ``sum_omega p(omega) mu_omega``."""
        return self.weights.mass @ self.matrix()

    def cost_moment(self, C: CostMatrix, x0: int = 0) -> float:
        """``sum_omega p(omega) sum_x c(x, x0) mu_omega(x)``."""
        return float(self.mean() @ C.c[:, x0])


@dataclass(frozen=True, eq=False)
class CheckedFamily:
    family: RandomMeasureFamily
    cost_moment: float


def validate_family(family: RandomMeasureFamily, C: CostMatrix, x0: int = 0) -> CheckedFamily:
    """Re-validate every vector of ``family`` and record its cost moment.

    The moment is always finite here; it is reported, not checked.
    """
    validate_prob(family.weights.mass, family.omega)
    for m in family.margins:
        validate_prob(m.mass, m.space)
    if family.space != C.space:
        raise SpaceMismatch("family margins and cost live on different spaces")
    return CheckedFamily(family, family.cost_moment(C, C.space.index(x0)))


def _check_pair(mu_fam: RandomMeasureFamily, nu_fam: RandomMeasureFamily, C: CostMatrix):
    if mu_fam.omega != nu_fam.omega:
        raise SpaceMismatch("families use different parameter spaces")
    if mu_fam.space != nu_fam.space or mu_fam.space != C.space:
        raise SpaceMismatch("families and cost live on different spaces")
    diff = np.max(np.abs(mu_fam.weights.mass - nu_fam.weights.mass))
    if diff > NORMALIZATION_TOL:
        raise WeightMismatch(f"parameter weights differ by {diff:.3g}")


@dataclass(frozen=True, eq=False)
class ParamPlan:
    plans: tuple[CouplingPlan, ...]
    G: np.ndarray
    total: float

    def __post_init__(self):
        object.__setattr__(self, "plans", tuple(self.plans))
        object.__setattr__(self, "G", _frozen(self.G))


def param_primal(mu_fam: RandomMeasureFamily, nu_fam: RandomMeasureFamily, C: CostMatrix) -> ParamPlan:
    _check_pair(mu_fam, nu_fam, C)
    _require_tight(C, False)
    pairs = list(zip(mu_fam.margins, nu_fam.margins))
    plans = map_atoms(lambda p: solve_primal(p[0], p[1], C), pairs)
    G = np.array([pl.value for pl in plans])
    # fixed atom order for the reduction
    total = float(sum(w * g for w, g in zip(mu_fam.weights.mass, G)))
    return ParamPlan(plans, G, total)


@dataclass(frozen=True, eq=False)
class ParamIntegrand:
    f: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "f", _frozen(self.f))

    def is_lipschitz(self, C: CostMatrix) -> bool:
        return all(lipschitz_check(row, C) for row in self.f)

    def value(self, mu_fam: RandomMeasureFamily, nu_fam: RandomMeasureFamily) -> float:
        """``sum_omega p(omega) (mu_omega(f_omega) - nu_omega(f_omega))``."""
        per_atom = np.einsum("wx,wx->w", mu_fam.matrix() - nu_fam.matrix(), self.f)
        return float(sum(w * v for w, v in zip(mu_fam.weights.mass, per_atom)))


def param_dual(mu_fam: RandomMeasureFamily, nu_fam: RandomMeasureFamily, C: CostMatrix) -> tuple[ParamIntegrand, float]:
    _check_pair(mu_fam, nu_fam, C)
    _require_tight(C, False)
    pairs = list(zip(mu_fam.margins, nu_fam.margins))
    results = map_atoms(lambda p: solve(p[0], p[1], C), pairs)
    integrand = ParamIntegrand(np.array([r.potential.f for r in results]))
    return integrand, integrand.value(mu_fam, nu_fam)


def glue(pp: ParamPlan, weights: ProbVec) -> np.ndarray:
    """Joint law ``lam[omega, i, j] = p(omega) * plan_omega[i, j]``."""
    if len(pp.plans) != weights.n:
        raise ShapeMismatch(f"{len(pp.plans)} plans for {weights.n} weights")
    stack = np.array([pl.pi for pl in pp.plans])
    return weights.mass[:, None, None] * stack


def independent_cost(mu_fam: RandomMeasureFamily, nu_fam: RandomMeasureFamily, C: CostMatrix) -> float:
    """Expected cost of the conditionally independent coupling."""
    per_atom = np.einsum("wi,ij,wj->w", mu_fam.matrix(), C.c, nu_fam.matrix())
    return float(mu_fam.weights.mass @ per_atom)
