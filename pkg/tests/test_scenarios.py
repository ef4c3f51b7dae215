import numpy as np
import pytest

from tsqc.ensemble import EnsembleConfig
from tsqc.errors import RankError, ValidationError
from tsqc.hilbert import Ket, ProjectiveMeasurement, TwoState, validate_measurement
from tsqc.scenarios import (
    RaffleScenario,
    Scenario,
    check_closeness,
    counterfactual_report,
    flip_unitary,
    quantum_raffle,
    random_scenario,
    three_holes,
)


def test_three_holes_structure():
    s = three_holes()
    assert s.dim == 3
    assert [M.name for M in s.candidate_measurements] == ["M1", "M2", "M_full"]
    assert s.candidate_measurements[0].labels == ("hole1", "hole2+hole3")
    assert s.candidate_measurements[1].labels == ("hole2", "hole1+hole3")
    np.testing.assert_allclose(s.two_state.pre.amp, np.ones(3) / np.sqrt(3))
    np.testing.assert_allclose(s.two_state.post.amp, np.array([1, 1, -1]) / np.sqrt(3))


def test_three_holes_kets_are_superpositions_of_locations():
    s = three_holes()
    for ket in (s.two_state.pre, s.two_state.post):
        assert np.count_nonzero(np.abs(ket.amp) > 1e-12) >= 2


def test_three_holes_report_claims():
    rep = counterfactual_report(three_holes(), EnsembleConfig(100_000, 42))
    by = {c.measurement: c for c in rep.candidates}
    assert by["M1"].abl["hole1"] == pytest.approx(1.0, abs=1e-12)
    assert by["M2"].abl["hole2"] == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(by["M_full"].abl.probs, [1 / 3] * 3, atol=1e-12)
    assert by["M1"].oracle["hole2+hole3"].count == 0
    assert by["M2"].oracle["hole1+hole3"].count == 0
    assert all(c.passed for c in rep.candidates)
    k = by["M_full"].kastner
    assert k.total() == pytest.approx(3.0, abs=1e-12) and not k.normalized
    assert check_closeness(rep)
    assert "exactly one measurement" in rep.preamble


def test_all_candidates_impossible():
    z = ProjectiveMeasurement.standard(2, ["0", "1"])
    s = Scenario("dead", TwoState(Ket([1, 0]), Ket([0, 1])), (z,), z, "1")
    rep = counterfactual_report(s, EnsembleConfig(2000, 1))
    assert rep.all_impossible
    c = rep.candidates[0]
    assert c.impossible and c.abl is None and c.oracle.no_kept_trials and c.passed
    assert c.kastner is None and "undefined" in c.kastner_error


def test_scenario_validation():
    z = ProjectiveMeasurement.standard(2, ["0", "1"])
    with pytest.raises(ValidationError, match="eigenket"):
        Scenario("x", TwoState(Ket([1, 0]), Ket([1, 1])), (z,), z, "0")
    with pytest.raises(ValidationError):
        Scenario("x", TwoState(Ket([1, 0]), Ket([1, 0])), (z,), z, "missing")
    basis = [Ket.basis(3, i) for i in range(3)]
    F = ProjectiveMeasurement.from_partition(basis, ["a", "b", "c"], [["a"], ["b", "c"]])
    with pytest.raises(RankError):
        Scenario("x", TwoState(Ket([1, 0, 0]), Ket([0, 1, 0])), (F,), F, "b+c")


def test_random_scenario_is_deterministic():
    a, b = random_scenario(2, 1), random_scenario(2, 1)
    np.testing.assert_array_equal(a.two_state.pre.amp, b.two_state.pre.amp)
    np.testing.assert_array_equal(a.two_state.post.amp, b.two_state.post.amp)
    assert len(a.candidate_measurements) == len(b.candidate_measurements)
    for Ma, Mb in zip(a.candidate_measurements, b.candidate_measurements):
        assert Ma.labels == Mb.labels
        for Pa, Pb in zip(Ma.projectors, Mb.projectors):
            np.testing.assert_array_equal(Pa.matrix, Pb.matrix)


@pytest.mark.parametrize("dim", range(2, 7))
def test_random_scenarios_are_valid(dim):
    for seed in range(20):
        s = random_scenario(dim, seed)
        assert 1 <= len(s.candidate_measurements) <= 3
        for M in s.candidate_measurements:
            assert validate_measurement(M).valid
            assert len(M) >= 2


def test_random_scenario_dim_range():
    for dim in (1, 7):
        with pytest.raises(ValueError):
            random_scenario(dim, 0)


def test_random_scenario_oracle_passes():
    for seed in range(5):
        rep = counterfactual_report(random_scenario(3, seed), EnsembleConfig(100_000, seed))
        assert rep.passed
        assert check_closeness(rep)


def test_flip_unitary_is_unitary():
    for alpha, beta in [(1 / np.sqrt(2), 1 / np.sqrt(2)), (1, 0), (0.6, 0.8j), (np.exp(0.3j) * 0.28, 0.96)]:
        U = flip_unitary(alpha, beta)
        np.testing.assert_allclose(U.conj().T @ U, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(U[:, 0], [0, alpha, beta])


def test_raffle_not_held():
    r = quantum_raffle(RaffleScenario(10, False))
    assert (r.heads, r.tails, r.null) == (0, 0, 10)
    assert r.contradiction and r.stipulation_probability == 0.0
    assert r.entrants == 0 and r.consistent


def test_raffle_held_fair_coin():
    n = 10_000
    r = quantum_raffle(RaffleScenario(n, True), seed=3)
    assert r.null == 0
    assert abs(r.heads - n / 2) <= 5 * np.sqrt(n / 4)
    assert not r.contradiction
    assert r.heads + r.tails == n


def test_raffle_certain_heads():
    r = quantum_raffle(RaffleScenario(1, True, 1, 0))
    assert r.heads == 1 and r.tails == 0 and r.null == 0


def test_raffle_config_validation():
    with pytest.raises(ValueError):
        RaffleScenario(0, True)
    with pytest.raises(ValueError):
        RaffleScenario(3, True, 1, 1)
