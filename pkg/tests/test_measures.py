import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from krc import (
    CostMatrix,
    FiniteSpace,
    NegativeMass,
    NotNormalized,
    ProbVec,
    SpaceMismatch,
    check_cost_tight,
    hahn_decompose,
    lipschitz_check,
    path_closure,
    validate_prob,
    variation_norm,
)
from krc.errors import InvalidCost, ShapeMismatch

from oracles import floyd_warshall_loops, random_metric, random_prob

S2 = FiniteSpace(["0", "1"])
S3 = FiniteSpace(["0", "1", "2"])


def pv(*mass):
    return validate_prob(mass, FiniteSpace.range(len(mass)))


def test_finite_space_rejects_duplicates_and_empty():
    with pytest.raises(ShapeMismatch):
        FiniteSpace(["a", "a"])
    with pytest.raises(ShapeMismatch):
        FiniteSpace([])
    assert FiniteSpace(["a", "b"]).index("b") == 1


@pytest.mark.parametrize("raw", [(0.5, 0.5), (0.7, 0.3)])
def test_validate_prob_accepts(raw):
    p = validate_prob(raw, S2)
    assert p.mass.tolist() == list(raw)


def test_validate_prob_errors():
    with pytest.raises(NotNormalized):
        validate_prob((0.7, 0.2), S2)
    with pytest.raises(NegativeMass):
        validate_prob((1.1, -0.1), S2)
    with pytest.raises(ShapeMismatch):
        validate_prob((1.0,), S2)


def test_validate_prob_does_not_renormalize():
    raw = [0.1] * 10
    p = validate_prob(raw, FiniteSpace.range(10))
    assert p.mass.tolist() == raw


def test_prob_vec_is_read_only():
    p = validate_prob((0.5, 0.5), S2)
    with pytest.raises(ValueError):
        p.mass[0] = 1.0


def test_hahn_decompose_examples():
    h = hahn_decompose(pv(0.7, 0.3), pv(0.4, 0.6))
    np.testing.assert_allclose(h.pi_plus, [0.3, 0.0], atol=1e-15)
    np.testing.assert_allclose(h.pi_minus, [0.0, 0.3], atol=1e-15)
    assert h.total_plus == pytest.approx(0.3, abs=1e-15)

    h = hahn_decompose(pv(0.7, 0.3), pv(0.7, 0.3))
    assert h.total_plus == 0 and not h.pi_plus.any() and not h.pi_minus.any()

    h = hahn_decompose(pv(1.0, 0.0), pv(0.0, 1.0))
    assert h.pi_plus.tolist() == [1.0, 0.0]
    assert h.pi_minus.tolist() == [0.0, 1.0]
    assert h.total_plus == 1.0


def test_space_mismatch():
    with pytest.raises(SpaceMismatch):
        hahn_decompose(validate_prob((1.0, 0.0), S2), validate_prob((1.0, 0.0), FiniteSpace(["a", "b"])))
    with pytest.raises(SpaceMismatch):
        variation_norm(pv(1.0, 0.0), pv(1.0, 0.0, 0.0))


def test_variation_norm_examples():
    assert variation_norm(pv(0.7, 0.3), pv(0.4, 0.6)) == pytest.approx(0.6, abs=1e-15)
    assert variation_norm(pv(0.7, 0.3), pv(0.7, 0.3)) == 0.0
    assert variation_norm(pv(1.0, 0.0), pv(0.0, 1.0)) == 2.0


def test_cost_matrix_validation():
    with pytest.raises(InvalidCost):
        CostMatrix(S2, [[0, 1], [2, 0]])
    with pytest.raises(InvalidCost):
        CostMatrix(S2, [[1, 1], [1, 0]])
    with pytest.raises(InvalidCost):
        CostMatrix(S2, [[0, np.inf], [np.inf, 0]])
    with pytest.raises(InvalidCost):
        CostMatrix(S2, [[0, -1], [-1, 0]])
    with pytest.raises(ShapeMismatch):
        CostMatrix(S3, [[0, 1], [1, 0]])


def test_path_closure_triangle_example():
    C = CostMatrix(S3, [[0, 1, 5], [1, 0, 1], [5, 1, 0]])
    closed = path_closure(C)
    assert closed.c[0, 2] == 2.0 and closed.c[2, 0] == 2.0
    np.testing.assert_array_equal(closed.c, floyd_warshall_loops(C.c))


@pytest.mark.parametrize("n", [1, 2, 4, 7])
def test_discrete_metric_unchanged(n):
    C = CostMatrix.discrete(FiniteSpace.range(n))
    np.testing.assert_array_equal(path_closure(C).c, C.c)


def test_check_cost_tight_examples():
    ok, _ = check_cost_tight(CostMatrix.discrete(FiniteSpace.range(4)))
    assert ok
    ok, (pair, gap) = check_cost_tight(CostMatrix(S3, [[0, 1, 5], [1, 0, 1], [5, 1, 0]]))
    assert not ok and pair == (0, 2) and gap == 3.0
    ok, _ = check_cost_tight(CostMatrix.line(FiniteSpace(["0", "0.5", "1"])))
    assert ok


def test_lipschitz_check_examples():
    D = CostMatrix.discrete(S2)
    assert lipschitz_check([1, 0], D)
    assert not lipschitz_check([2, 0], D)
    rng = np.random.default_rng(3)
    C = CostMatrix(FiniteSpace.range(6), random_metric(rng, 6, "euclid"))
    assert lipschitz_check(np.full(6, 4.2), C)


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=st.integers(1, 9))
def test_hahn_properties(seed, n):
    rng = np.random.default_rng(seed)
    s = FiniteSpace.range(n)
    mu, nu = ProbVec(s, random_prob(rng, n, True)), ProbVec(s, random_prob(rng, n, True))
    h = hahn_decompose(mu, nu)
    np.testing.assert_allclose(mu.mass - nu.mass, h.pi_plus - h.pi_minus, atol=1e-15, rtol=0)
    assert not np.any(h.pi_plus * h.pi_minus)
    assert variation_norm(mu, nu) == pytest.approx(h.pi_plus.sum() + h.pi_minus.sum(), abs=1e-15)
    assert variation_norm(mu, nu) == pytest.approx(2 * h.total_plus, abs=1e-14)


def _random_symmetric(rng, n):
    w = rng.uniform(0, 4, size=(n, n))
    w = np.minimum(w, w.T)
    np.fill_diagonal(w, 0.0)
    return w


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=st.integers(1, 9))
def test_closure_properties(seed, n):
    rng = np.random.default_rng(seed)
    C = CostMatrix(FiniteSpace.range(n), _random_symmetric(rng, n))
    closed = path_closure(C)
    np.testing.assert_allclose(closed.c, floyd_warshall_loops(C.c), atol=1e-12, rtol=0)
    assert np.all(closed.c <= C.c)
    np.testing.assert_array_equal(path_closure(closed).c, closed.c)
    triangle = closed.c[:, :, None] + closed.c[None, :, :] - closed.c[:, None, :]
    assert triangle.min() >= -1e-12
    assert check_cost_tight(closed)[0]


@settings(max_examples=60, deadline=None)
@given(seed=seeds, n=st.integers(2, 7))
def test_lipschitz_class_unchanged_by_closure(seed, n):
    rng = np.random.default_rng(seed)
    C = CostMatrix(FiniteSpace.range(n), _random_symmetric(rng, n))
    closed = path_closure(C)
    for f in [rng.uniform(0, 3, n), rng.uniform(0, 0.5, n), np.zeros(n)]:
        assert lipschitz_check(f, C) == lipschitz_check(f, closed)
