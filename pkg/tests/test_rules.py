from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tsqc.errors import DimensionMismatch, ImpossiblePostselection, InvalidMeasurement, ZeroOverlap
from tsqc.hilbert import Ket, Projector, ProjectiveMeasurement, TwoState, random_ket, random_unitary
from tsqc.rules import abl, born_predictive, born_retrodictive, joint_weights, kastner_rule, mixture_at_t


# --- independent oracles ----------------------------------------------------

def exact_joint(pre: list[int], post: list[int], groups: list[list[int]]) -> list[Fraction]:
    """|<b|P_k|a>|^2 for integer kets and coordinate-subset projectors, in rationals."""
    norm = Fraction(sum(x * x for x in pre) * sum(x * x for x in post))
    return [Fraction(sum(post[i] * pre[i] for i in g) ** 2) / norm for g in groups]


def sequential_abl(a: np.ndarray, b: np.ndarray, groups: list[np.ndarray]) -> np.ndarray:
    """P(k | b) by enumerating: Born on a, collapse, Born of b on the collapsed state."""
    joint = []
    for basis_vectors in groups:
        proj = basis_vectors @ (basis_vectors.conj().T @ a)
        pk = np.vdot(proj, proj).real
        if pk < 1e-30:
            joint.append(0.0)
            continue
        psi = proj / np.sqrt(pk)
        joint.append(pk * abs(np.vdot(b, psi)) ** 2)
    joint = np.array(joint)
    return joint / joint.sum()


def eq1(a: np.ndarray, b: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Nondegenerate ABL: |<a|q_k><q_k|b>|^2 normalized over k."""
    num = np.array([abs(np.vdot(a, q) * np.vdot(q, b)) ** 2 for q in basis.T])
    return num / num.sum()


def random_partition_measurement(dim, rng):
    u = random_unitary(dim, rng)
    order = rng.permutation(dim)
    n_groups = int(rng.integers(2, dim + 1))
    cuts = np.sort(rng.choice(np.arange(1, dim), size=n_groups - 1, replace=False))
    groups = [u[:, g] for g in np.split(order, cuts)]
    M = ProjectiveMeasurement(
        [Projector(g @ g.conj().T, f"g{i}") for i, g in enumerate(groups)], "R"
    )
    return M, groups, u


# --- examples ---------------------------------------------------------------

def test_born_predictive_examples(z2):
    np.testing.assert_allclose(born_predictive(Ket([1, 0]), z2).probs, [1, 0])
    np.testing.assert_allclose(born_predictive(Ket([1, 1]), z2).probs, [0.5, 0.5], atol=1e-15)
    M3 = ProjectiveMeasurement.standard(3)
    np.testing.assert_allclose(born_predictive(Ket([1, 1, 1]), M3).probs, [1 / 3] * 3, atol=1e-15)


def test_born_retrodictive_examples(z2):
    np.testing.assert_allclose(born_retrodictive(Ket([0, 1]), z2).probs, [0, 1])
    np.testing.assert_allclose(born_retrodictive(Ket([1, 1]), z2).probs, [0.5, 0.5], atol=1e-15)
    M3 = ProjectiveMeasurement.standard(3)
    np.testing.assert_allclose(born_retrodictive(Ket([1, 1, -1]), M3).probs, [1 / 3] * 3, atol=1e-15)


def test_born_errors(z2):
    with pytest.raises(DimensionMismatch):
        born_predictive(Ket([1, 0, 0]), z2)
    with pytest.raises(InvalidMeasurement):
        born_predictive(Ket([1, 0]), ProjectiveMeasurement([Projector([[1, 0], [0, 0]], "0")]))


def test_abl_eigenstate(z2):
    ts = TwoState(Ket([1, 0]), Ket([1, 0]))
    np.testing.assert_array_equal(abl(ts, z2).probs, [1, 0])


THREE_PRE, THREE_POST = [1, 1, 1], [1, 1, -1]


@pytest.mark.parametrize(
    "groups, expected",
    [
        ([[0], [1, 2]], [1, 0]),  # first hole with certainty
        ([[1], [0, 2]], [1, 0]),  # second hole with certainty
        ([[0], [1], [2]], [Fraction(1, 3)] * 3),
    ],
)
def test_abl_three_holes_against_exact_rationals(holes, groups, expected):
    joint = exact_joint(THREE_PRE, THREE_POST, groups)
    exact = [j / sum(joint) for j in joint]
    assert exact == [Fraction(e) for e in expected]

    basis, labels = holes
    M = ProjectiveMeasurement.from_partition(basis, labels, [[labels[i] for i in g] for g in groups])
    got = abl(TwoState(Ket(THREE_PRE), Ket(THREE_POST)), M).probs
    np.testing.assert_allclose(got, [float(e) for e in exact], atol=1e-12, rtol=0)


def test_abl_impossible_postselection(z2):
    ts = TwoState(Ket([1, 0]), Ket([0, 1]))
    with pytest.raises(ImpossiblePostselection):
        abl(ts, z2)


def test_kastner_examples(z2, holes):
    w = kastner_rule(TwoState(Ket([1, 0]), Ket([1, 0])), z2)
    np.testing.assert_array_equal(w.weights, [1, 0])
    assert w.normalized

    basis, labels = holes
    full = ProjectiveMeasurement.from_partition(basis, labels, [[x] for x in labels])
    w = kastner_rule(TwoState(Ket(THREE_PRE), Ket(THREE_POST)), full)
    # each numerator 1/9 over denominator |1/3|^2
    assert [float(j) * 9 for j in exact_joint(THREE_PRE, THREE_POST, [[0], [1], [2]])] == [1.0, 1.0, 1.0]
    np.testing.assert_allclose(w.weights, [1, 1, 1], atol=1e-12, rtol=0)
    assert w.total() == pytest.approx(3.0, abs=1e-12)
    assert not w.normalized


def test_kastner_single_outcome_measurement(rng):
    ident = ProjectiveMeasurement([Projector(np.eye(3), "all")], "trivial")
    a, b = random_ket(3, rng), random_ket(3, rng)
    w = kastner_rule(TwoState(a, b), ident)
    assert w.weights == pytest.approx([1.0], abs=1e-12)
    assert w.normalized


def test_kastner_zero_overlap(z2):
    with pytest.raises(ZeroOverlap):
        kastner_rule(TwoState(Ket([1, 0]), Ket([0, 1])), z2)


def test_mixture_examples(z2):
    np.testing.assert_array_equal(mixture_at_t(Ket([1, 0]), z2).matrix, [[1, 0], [0, 0]])
    np.testing.assert_allclose(mixture_at_t(Ket([1, 1]), z2).matrix, np.diag([0.5, 0.5]), atol=1e-15)
    rho = mixture_at_t(Ket([1, 1, 1]), ProjectiveMeasurement.standard(3)).matrix
    np.testing.assert_allclose(rho, np.eye(3) / 3, atol=1e-15)


def test_mixture_is_hermitian_unit_trace(rng):
    for _ in range(100):
        dim = int(rng.integers(2, 7))
        M, _, _ = random_partition_measurement(dim, rng)
        rho = mixture_at_t(random_ket(dim, rng), M)
        np.testing.assert_allclose(rho.matrix, rho.matrix.conj().T, atol=1e-10)
        assert abs(rho.trace() - 1) <= 1e-10
        assert np.linalg.eigvalsh(rho.matrix).min() >= -1e-9


def test_outputs_keep_measurement_order(holes):
    basis, labels = holes
    M = ProjectiveMeasurement.from_partition(basis, labels, [["hole3"], ["hole1"], ["hole2"]])
    d = abl(TwoState(Ket(THREE_PRE), Ket(THREE_POST)), M)
    assert d.labels == ("hole3", "hole1", "hole2")


# --- properties -------------------------------------------------------------

def test_abl_matches_sequential_enumeration(rng):
    for _ in range(300):
        dim = int(rng.integers(2, 7))
        M, groups, _ = random_partition_measurement(dim, rng)
        a, b = random_ket(dim, rng), random_ket(dim, rng)
        np.testing.assert_allclose(abl(TwoState(a, b), M).probs, sequential_abl(a.amp, b.amp, groups), atol=1e-10)


def test_rank_one_agreement_with_direct_formula(rng):
    for _ in range(300):
        dim = int(rng.integers(2, 7))
        u = random_unitary(dim, rng)
        M = ProjectiveMeasurement.from_basis([Ket(u[:, i]) for i in range(dim)])
        a, b = random_ket(dim, rng), random_ket(dim, rng)
        np.testing.assert_allclose(abl(TwoState(a, b), M).probs, eq1(a.amp, b.amp, u), atol=1e-12, rtol=0)


def test_single_nonzero_transition_is_certain(rng):
    for _ in range(100):
        dim = int(rng.integers(3, 7))
        M, groups, _ = random_partition_measurement(dim, rng)
        a = random_ket(dim, rng)
        # post inside the range of group 0 only
        g = groups[0]
        b = Ket(g @ (rng.standard_normal(g.shape[1]) + 1j * rng.standard_normal(g.shape[1])))
        d = abl(TwoState(a, b), M)
        assert d.probs[0] == pytest.approx(1.0, abs=1e-9)


def test_basis_representation_invariance(rng):
    for _ in range(200):
        dim = int(rng.integers(2, 7))
        M, _, _ = random_partition_measurement(dim, rng)
        a, b = random_ket(dim, rng), random_ket(dim, rng)
        V = random_unitary(dim, rng)
        M2 = ProjectiveMeasurement([Projector(V @ P.matrix @ V.conj().T, P.label) for P in M.projectors])
        p1 = abl(TwoState(a, b), M).probs
        p2 = abl(TwoState(Ket(V @ a.amp), Ket(V @ b.amp)), M2).probs
        np.testing.assert_allclose(p1, p2, atol=1e-9)


def test_kastner_weights_match_abl_shape(rng):
    # same numerators: kastner weights are ABL probabilities rescaled by D / |<b|a>|^2
    for _ in range(100):
        dim = int(rng.integers(2, 7))
        M, _, _ = random_partition_measurement(dim, rng)
        ts = TwoState(random_ket(dim, rng), random_ket(dim, rng))
        w = kastner_rule(ts, M).weights
        p = abl(ts, M).probs
        np.testing.assert_allclose(w / w.sum(), p, atol=1e-9)
        overlap = abs(np.vdot(ts.post.amp, ts.pre.amp)) ** 2
        assert w.sum() == pytest.approx(joint_weights(ts, M).sum() / overlap, rel=1e-9)


@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_distributions_normalize(dim, seed):
    g = np.random.default_rng(seed)
    M, _, _ = random_partition_measurement(dim, g)
    ts = TwoState(random_ket(dim, g), random_ket(dim, g))
    for d in (abl(ts, M), born_predictive(ts.pre, M), born_retrodictive(ts.post, M)):
        assert abs(d.total() - 1.0) <= 1e-9
        assert (d.probs >= 0).all() and (d.probs <= 1 + 1e-12).all()


@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_abl_time_symmetry_property(dim, seed):
    g = np.random.default_rng(seed)
    M, _, _ = random_partition_measurement(dim, g)
    ts = TwoState(random_ket(dim, g), random_ket(dim, g))
    np.testing.assert_allclose(abl(ts, M).probs, abl(ts.reversed(), M).probs, atol=1e-12, rtol=0)
