"""Finite measure spaces, signed decompositions and cost matrices."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    IndexOutOfRange,
    InvalidCost,
    NegativeMass,
    NotNormalized,
    ShapeMismatch,
    SpaceMismatch,
)

NORMALIZATION_TOL = 1e-12
NEGATIVE_TOL = 1e-15
LIPSCHITZ_TOL = 1e-9
TIGHTNESS_TOL = 1e-12


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class FiniteSpace:
    """An ordered set of labelled points.  Index order is canonical."""

    labels: tuple[str, ...]

    def __init__(self, labels: Iterable):
        labels = tuple(str(x) for x in labels)
        if not labels:
            raise ShapeMismatch("a finite space needs at least one point")
        if len(set(labels)) != len(labels):
            raise ShapeMismatch(f"duplicate labels in {labels!r}")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def range(cls, n: int) -> "FiniteSpace":
        return cls(str(i) for i in range(n))

    @property
    def n(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, key) -> int:
        """Resolve a label (or an in-range integer index) to an index."""
        if isinstance(key, (int, np.integer)) and not isinstance(key, bool):
            if 0 <= key < self.n:
                return int(key)
            raise IndexOutOfRange(f"index {key} outside 0..{self.n - 1}")
        try:
            return self.labels.index(str(key))
        except ValueError:
            raise IndexOutOfRange(f"unknown point label {key!r}") from None


@dataclass(frozen=True, eq=False)
class ProbVec:
    space: FiniteSpace
    mass: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mass", _frozen(self.mass))

    @property
    def n(self) -> int:
        return self.space.n

    def integrate(self, f) -> float:
        return float(np.dot(self.mass, np.asarray(f, dtype=float)))

    def __eq__(self, other):
        if not isinstance(other, ProbVec):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.mass, other.mass)

    def __repr__(self):
        return f"ProbVec({list(self.space.labels)}, {self.mass.tolist()})"


def validate_prob(raw: Sequence[float], space: FiniteSpace) -> ProbVec:
    """Check ``raw`` is a probability vector on ``space``; never renormalizes."""
    mass = np.asarray(raw, dtype=float)
    if mass.ndim != 1 or mass.shape[0] != space.n:
        raise ShapeMismatch(f"expected {space.n} masses, got shape {mass.shape}")
    if not np.all(np.isfinite(mass)):
        raise NotNormalized("masses must be finite")
    if np.any(mass < -NEGATIVE_TOL):
        i = int(np.argmin(mass))
        raise NegativeMass(f"negative mass {mass[i]!r} at {space.labels[i]!r}")
    total = float(mass.sum())
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise NotNormalized(f"masses sum to {total!r}, not 1")
    return ProbVec(space, mass)


def _same_space(*vecs: ProbVec) -> FiniteSpace:
    space = vecs[0].space
    for v in vecs[1:]:
        if v.space != space:
            raise SpaceMismatch("measures live on different spaces")
    return space


@dataclass(frozen=True, eq=False)
class SignedDecomposition:
    pi_plus: np.ndarray
    pi_minus: np.ndarray
    total_plus: float


def hahn_decompose(mu: ProbVec, nu: ProbVec) -> SignedDecomposition:
    """Split ``mu - nu`` into its positive and negative parts."""
    _same_space(mu, nu)
    diff = mu.mass - nu.mass
    plus = np.maximum(diff, 0.0)
    minus = np.maximum(-diff, 0.0)
    return SignedDecomposition(_frozen(plus), _frozen(minus), float(plus.sum()))


def variation_norm(mu: ProbVec, nu: ProbVec) -> float:
    _same_space(mu, nu)
    return float(np.abs(mu.mass - nu.mass).sum())


def _min_plus_closure(c: np.ndarray) -> np.ndarray:
    # Floyd-Warshall, one pivot at a time
    d = np.array(c, dtype=float, copy=True)
    for k in range(d.shape[0]):
        np.minimum(d, d[:, k, None] + d[None, k, :], out=d)
    return d


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Finite, symmetric, nonnegative cost with zero diagonal.

    ``tight`` certifies that the cost equals the supremum of ``|u(x) - u(y)|``
    over its own Lipschitz class, which on a finite space means the cost is
    a fixed point of the min-plus path closure.
    """

    space: FiniteSpace
    c: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        n = self.space.n
        if c.shape != (n, n):
            raise ShapeMismatch(f"cost must be {n}x{n}, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InvalidCost("costs must be finite")
        if np.any(c < 0):
            raise InvalidCost("costs must be nonnegative")
        if np.any(np.diag(c) != 0):
            raise InvalidCost("cost diagonal must be zero")
        if not np.array_equal(c, c.T):
            raise InvalidCost("cost must be symmetric")
        object.__setattr__(self, "c", _frozen(c))

    @classmethod
    def discrete(cls, space: FiniteSpace) -> "CostMatrix":
        return cls(space, 1.0 - np.eye(space.n))

    @classmethod
    def line(cls, space: FiniteSpace, coords=None) -> "CostMatrix":
        """``|x - y|`` on the given coordinates (default: the labels as floats)."""
        if coords is None:
            try:
                coords = [float(x) for x in space.labels]
            except ValueError:
                raise InvalidCost("line metric needs numeric labels or coords") from None
        x = np.asarray(coords, dtype=float)
        if x.shape != (space.n,):
            raise ShapeMismatch(f"expected {space.n} coordinates, got {x.shape}")
        return cls(space, np.abs(x[:, None] - x[None, :]))

    @property
    def n(self) -> int:
        return self.space.n

    def scaled(self, alpha: float) -> "CostMatrix":
        return CostMatrix(self.space, alpha * self.c)

    @cached_property
    def closure(self) -> np.ndarray:
        return _frozen(_min_plus_closure(self.c))

    @cached_property
    def tightness(self) -> tuple[bool, tuple[int, int], float]:
        gap = self.c - self.closure
        flat = int(np.argmax(gap))
        i, j = divmod(flat, self.n)
        if i > j:
            i, j = j, i
        worst = float(gap[i, j])
        return worst <= TIGHTNESS_TOL, (i, j), worst

    @property
    def tight(self) -> bool:
        return self.tightness[0]


def path_closure(C: CostMatrix) -> CostMatrix:
    """Shortest-path (min-plus) closure; the largest pseudo-metric below ``C``."""
    return CostMatrix(C.space, C.closure)


def check_cost_tight(C: CostMatrix) -> tuple[bool, tuple[tuple[int, int], float]]:
    """Return ``(tight, ((i, j), gap))`` where ``(i, j)`` maximizes ``C - closure``."""
    ok, pair, gap = C.tightness
    return ok, (pair, gap)


def lipschitz_check(f, C: CostMatrix, tol: float = LIPSCHITZ_TOL) -> bool:
    f = np.asarray(f, dtype=float)
    if f.shape != (C.n,):
        raise ShapeMismatch(f"expected {C.n} values, got shape {f.shape}")
    return bool(np.all(np.abs(f[:, None] - f[None, :]) <= C.c + tol))


@dataclass(frozen=True, eq=False)
class DualPotential:
    space: FiniteSpace
    f: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "f", _frozen(self.f))

    def is_lipschitz(self, C: CostMatrix) -> bool:
        return lipschitz_check(self.f, C)
