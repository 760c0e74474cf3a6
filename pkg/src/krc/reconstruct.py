"""Coupling constructions for ``(M, X)`` and their samplers.

``couple_against`` glues per-atom optimal plans between ``P_{X|M=omega}`` and
a target family ``Q_omega`` into a law on ``Omega x S x S``.  With
``Q_omega = P_X`` the third coordinate ``X*`` is independent of ``M``, has the
law of ``X`` and achieves ``E c(X, X*) = tau_c``.

To realize ``X*`` as a function of ``(M, X, U)`` with ``U`` uniform, the
glued law is disintegrated into kernels ``lambda_{omega, x}`` and ``X*`` is
drawn as the generalized inverse of the kernel's distribution function at
``U``.  The label order of ``S`` plays the role of an embedding of the state
space into ``[0, 1]``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .dependence import JointLaw, beta, conditionals, tau_c
from .errors import NotStochastic, ShapeMismatch, SpaceMismatch, WeightMismatch
from .measures import NORMALIZATION_TOL, CostMatrix, FiniteSpace, ProbVec, _frozen, validate_prob
from .param import RandomMeasureFamily, glue, param_primal


@dataclass(frozen=True, eq=False)
class TripleLaw:
    """Law of ``(M, X, Y)``; ``target[omega]`` is the conditional law of ``Y``."""

    omega: FiniteSpace
    s: FiniteSpace
    tensor: np.ndarray
    weights: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        for name in ("tensor", "weights", "target"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        shape = (self.omega.n, self.s.n, self.s.n)
        if self.tensor.shape != shape:
            raise ShapeMismatch(f"tensor must have shape {shape}, got {self.tensor.shape}")

    def xy_cost(self, C: CostMatrix) -> float:
        return float(np.einsum("wij,ij->", self.tensor, C.c))

    def mx_law(self) -> np.ndarray:
        return self.tensor.sum(axis=2)

    def my_law(self) -> np.ndarray:
        return self.tensor.sum(axis=1)

    def to_json(self) -> dict:
        return {
            "omega_labels": list(self.omega.labels),
            "s_labels": list(self.s.labels),
            "weights": self.weights.tolist(),
            "target": self.target.tolist(),
            "tensor": self.tensor.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TripleLaw":
        return cls(
            FiniteSpace(obj["omega_labels"]),
            FiniteSpace(obj["s_labels"]),
            np.asarray(obj["tensor"], dtype=float),
            np.asarray(obj["weights"], dtype=float),
            np.asarray(obj["target"], dtype=float),
        )


def couple_against(joint: JointLaw, Q: RandomMeasureFamily, C: CostMatrix) -> TripleLaw:
    """Glue, atom by atom, optimal plans from ``P_{X|M=omega}`` to ``Q_omega``."""
    cs = conditionals(joint)
    if Q.omega != joint.omega:
        raise SpaceMismatch("target family and joint law use different parameter spaces")
    diff = np.max(np.abs(Q.weights.mass - cs.weights.mass))
    if diff > NORMALIZATION_TOL:
        raise WeightMismatch(f"target weights differ from P(M) by {diff:.3g}")
    pp = param_primal(cs.conditionals, Q, C)
    return TripleLaw(joint.omega, joint.s, glue(pp, cs.weights), cs.weights.mass, Q.matrix())


def reconstruct_law(joint: JointLaw, C: CostMatrix) -> TripleLaw:
    """Law of ``(M, X, X*)`` with ``X*`` independent of ``M``, distributed as ``X``."""
    return couple_against(joint, conditionals(joint).marginal_family(), C)


def verify_independence(t: TripleLaw) -> float:
    """Max deviation of the ``(M, Y)`` law from ``P(M) x P_Y``."""
    my = t.my_law()
    product = np.outer(my.sum(axis=1), my.sum(axis=0))
    return float(np.max(np.abs(my - product)))


@dataclass(frozen=True, eq=False)
class ConditionalKernel:
    """Conditional laws of ``Y`` given ``(M, X)`` and their CDFs in label order."""

    omega: FiniteSpace
    s: FiniteSpace
    kernels: np.ndarray  # [omega, x, y]

    def __post_init__(self):
        object.__setattr__(self, "kernels", _frozen(self.kernels))

    @property
    def cdf(self) -> np.ndarray:
        return np.cumsum(self.kernels, axis=2)

    def kernel(self, w: int, x: int) -> ProbVec:
        return ProbVec(self.s, self.kernels[w, x])

    def reassemble(self, mx_law: np.ndarray) -> np.ndarray:
        """``t(omega, x, y) = P(M = omega, X = x) * lambda_{omega, x}(y)``."""
        return mx_law[:, :, None] * self.kernels

    def inverse_cdf(self, w: int, x: int, u: float) -> int:
        """Smallest label index ``y`` with ``F_{omega, x}(y) >= u``."""
        return int(_inverse_cdf(self.kernels[w, x], np.array([u]))[0])


def _inverse_cdf(mass: np.ndarray, u: np.ndarray) -> np.ndarray:
    F = np.cumsum(mass)
    y = np.searchsorted(F, u, side="left")
    # rounding can leave F[-1] just below 1; fall back to the last charged point
    last = int(np.flatnonzero(mass > 0)[-1])
    return np.minimum(y, last)


def disintegrate_kernel(t: TripleLaw) -> ConditionalKernel:
    """Row-normalize each ``(omega, x)`` slice.

    Cells of zero mass get the target law ``Q_omega``; on a null set any
    choice reassembles to the same triple law.
    """
    row = t.tensor.sum(axis=2)
    kernels = np.empty_like(t.tensor)
    for w in range(t.omega.n):
        for x in range(t.s.n):
            if row[w, x] > 0:
                kernels[w, x] = t.tensor[w, x] / row[w, x]
            else:
                kernels[w, x] = t.target[w]
    return ConditionalKernel(t.omega, t.s, kernels)


@dataclass(frozen=True, eq=False)
class SampleBatch:
    seed: int
    omega: FiniteSpace
    s: FiniteSpace
    w: np.ndarray
    x: np.ndarray
    y: np.ndarray
    u: np.ndarray

    def __len__(self) -> int:
        return len(self.u)

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["omega_label", "x_label", "y_label", "u"])
        wl, sl = self.omega.labels, self.s.labels
        for w, x, y, u in zip(self.w, self.x, self.y, self.u):
            out.writerow([wl[w], sl[x], sl[y], repr(float(u))])
        return buf.getvalue()

    def mean_cost(self, C: CostMatrix) -> float:
        return float(C.c[self.x, self.y].mean())


def sample_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Two independent PCG64 streams: one for ``(M, X)``, one for ``U``."""
    ss = np.random.SeedSequence(seed)
    first, second = ss.spawn(2)
    return np.random.Generator(np.random.PCG64(first)), np.random.Generator(np.random.PCG64(second))


def inverse_cdf_sample(kernel: ConditionalKernel, joint: JointLaw, seed: int, N: int) -> SampleBatch:
    """Draw ``N`` iid ``(M, X, U)`` and set ``Y = F^{-1}_{M, X}(U)``."""
    if N < 1:
        raise ValueError("N must be positive")
    mx_rng, u_rng = sample_streams(seed)
    flat = joint.table.ravel()
    cells = _inverse_cdf(flat, 1.0 - mx_rng.random(N))
    w, x = np.divmod(cells, joint.s.n)
    # U in (0, 1] so that u = 0 never selects a zero-mass first label
    u = 1.0 - u_rng.random(N)
    y = np.empty(N, dtype=np.int64)
    for cell in np.unique(cells):
        hit = cells == cell
        y[hit] = _inverse_cdf(kernel.kernels[cell // joint.s.n, cell % joint.s.n], u[hit])
    return SampleBatch(seed, joint.omega, joint.s, w, x, y, u)


def markov_joint(P: np.ndarray, init: ProbVec, k: int) -> JointLaw:
    """Joint law of ``(X_0, X_k)``."""
    return JointLaw(init.space, init.space, init.mass[:, None] * np.linalg.matrix_power(P, k))


def dobrushin_coefficient(P: np.ndarray) -> float:
    """``max_{i, j} 0.5 * |P[i] - P[j]|_1``."""
    return 0.5 * float(np.abs(P[:, None, :] - P[None, :, :]).sum(axis=2).max())


@dataclass(frozen=True, eq=False)
class DecaySeries:
    tau: np.ndarray
    beta: np.ndarray
    beta0: float
    contraction: float
    rate: float | None

    def envelope(self) -> np.ndarray:
        k = np.arange(1, len(self.beta) + 1)
        return self.contraction**k * self.beta0


def _fit_rate(tau: np.ndarray) -> float | None:
    k = np.arange(1, len(tau) + 1)
    keep = tau > 1e-12
    if keep.sum() < 2:
        return None
    slope = np.polyfit(k[keep], np.log(tau[keep]), 1)[0]
    return math.exp(slope)


def validate_stochastic(P, space: FiniteSpace) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.shape != (space.n, space.n):
        raise ShapeMismatch(f"transition matrix must be {space.n}x{space.n}, got {P.shape}")
    for i, row in enumerate(P):
        try:
            validate_prob(row, space)
        except (ValueError, ArithmeticError) as exc:
            raise NotStochastic(f"row {i}: {exc}") from None
    return P


def markov_tau_decay(P, init: ProbVec, C: CostMatrix, n_max: int) -> DecaySeries:
    """``tau_c`` and ``beta`` between ``X_0`` and ``X_k`` for ``k = 1..n_max``.

    The fitted rate is a least-squares slope of ``log tau_k``; a diagnostic.
    """
    P = validate_stochastic(P, init.space)
    taus, betas = [], []
    for k in range(1, n_max + 1):
        joint = markov_joint(P, init, k)
        taus.append(tau_c(joint, C))
        betas.append(beta(joint))
    tau = np.array(taus)
    return DecaySeries(
        tau, np.array(betas), beta(markov_joint(P, init, 0)), dobrushin_coefficient(P), _fit_rate(tau)
    )
