"""Named experiments, random scenarios, and counterfactual reports.

A counterfactual query keeps the actual record (pre-selection at t_a,
post-selection at t_b) and adds exactly one measurement at an intermediate
time t. Each candidate measurement in a scenario is one such query.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from tsqc.config import DEFAULT, Tolerances
from tsqc.ensemble import (
    EnsembleConfig,
    EnsembleReport,
    Mode,
    Verdict,
    compare,
    postselection_probability,
    run_pre_post_selected,
)
from tsqc.errors import ImpossiblePostselection, RankError, ValidationError, ZeroOverlap
from tsqc.hilbert import (
    Ket,
    ProjectiveMeasurement,
    TwoState,
    basis_containing,
    random_ket,
    random_unitary,
    require_valid,
)
from tsqc.kernels import build_cdf, simulate_chain
from tsqc.rng import GENERATOR_ID, SeedTree
from tsqc.rules import Distribution, OutcomeWeights, abl, born_predictive, born_retrodictive, kastner_rule

@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    two_state: TwoState
    candidate_measurements: tuple[ProjectiveMeasurement, ...]
    final_measurement: ProjectiveMeasurement
    b_label: str
    notes: str = ""
    basis_labels: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "candidate_measurements", tuple(self.candidate_measurements))
        self.validate()

    @property
    def dim(self) -> int:
        return self.two_state.dim

    def validate(self, tol: Tolerances = DEFAULT) -> None:
        dim = self.dim
        for M in self.candidate_measurements + (self.final_measurement,):
            if M.dim != dim:
                raise ValidationError(f"measurement {M.name!r} has dim {M.dim}, scenario dim {dim}", "dimension")
            require_valid(M, tol)
        F = self.final_measurement
        if self.b_label not in F.labels:
            raise ValidationError(f"final measurement lacks b_label {self.b_label!r}", "b_label")
        P = F[self.b_label]
        if P.rank != 1:
            raise RankError(f"post-selection outcome {self.b_label!r} has rank {P.rank}")
        fidelity = float(np.vdot(self.two_state.post.amp, P.matrix @ self.two_state.post.amp).real)
        if abs(1.0 - fidelity) > tol.aggregate:
            raise ValidationError(
                f"post ket is not the eigenket of final outcome {self.b_label!r}",
                "post_matches_final", abs(1.0 - fidelity),
            )


def _hole_basis() -> list[Ket]:
    return [Ket.basis(3, i) for i in range(3)]


def three_holes() -> Scenario:
    """Particle launched at A, plate with three holes, detected at B.

    Pre-selection (1,1,1)/sqrt3 and post-selection (1,1,-1)/sqrt3 in the hole
    basis; the same amplitudes as the three-box setup.
    """
    labels = ("hole1", "hole2", "hole3")
    basis = _hole_basis()
    pre = Ket([1, 1, 1])
    post = Ket([1, 1, -1])
    m1 = ProjectiveMeasurement.from_partition(basis, labels, [["hole1"], ["hole2", "hole3"]], "M1")
    m2 = ProjectiveMeasurement.from_partition(basis, labels, [["hole2"], ["hole1", "hole3"]], "M2")
    full = ProjectiveMeasurement.from_partition(basis, labels, [["hole1"], ["hole2"], ["hole3"]], "M_full")
    final = ProjectiveMeasurement.from_basis([post, Ket([1, -1, 0]), Ket([1, 1, 2])], ["B", "B2", "B3"], "final")
    return Scenario(
        "three_holes",
        TwoState(pre, post, 0.0, 1.0),
        (m1, m2, full),
        final,
        "B",
        notes="pre (1,1,1)/sqrt3 at plate entry; post (1,1,-1)/sqrt3 at plate exit; B is the detection location",
        basis_labels=labels,
    )


def _random_partition(dim: int, rng: np.random.Generator) -> list[list[int]]:
    order = rng.permutation(dim)
    n_groups = int(rng.integers(2, dim + 1))
    cuts = np.sort(rng.choice(np.arange(1, dim), size=n_groups - 1, replace=False))
    return [sorted(int(i) for i in g) for g in np.split(order, cuts)]


def random_scenario(dim: int, seed: int, min_postselection: float = 1e-3, max_attempts: int = 1000) -> Scenario:
    """Haar-random pre/post kets and 1-3 random basis-partition measurements.

    Redraws until every candidate's post-selection probability is at least
    ``min_postselection``, which bounds the oracle's discarded fraction.
    """
    if not 2 <= dim <= 6:
        raise ValueError(f"dim must be in 2..6, got {dim}")
    rng = SeedTree(seed).generator()
    for _ in range(max_attempts):
        pre = random_ket(dim, rng)
        post = random_ket(dim, rng)
        candidates = []
        for m in range(int(rng.integers(1, 4))):
            u = random_unitary(dim, rng)
            basis = [Ket(u[:, i]) for i in range(dim)]
            basis_labels = [f"q{i}" for i in range(dim)]
            groups = [[basis_labels[i] for i in g] for g in _random_partition(dim, rng)]
            candidates.append(ProjectiveMeasurement.from_partition(basis, basis_labels, groups, f"M{m + 1}"))
        final_basis = basis_containing(post, rng)
        final = ProjectiveMeasurement.from_basis(final_basis, ["b"] + [f"f{i}" for i in range(1, dim)], "final")
        if min(postselection_probability(pre, M, post) for M in candidates) < min_postselection:
            continue
        return Scenario(
            f"random_d{dim}_s{seed}",
            TwoState(pre, post),
            tuple(candidates),
            final,
            "b",
            notes=f"random scenario dim={dim} seed={seed}",
            basis_labels=tuple(f"e{i}" for i in range(dim)),
        )
    raise RuntimeError(f"no scenario with post-selection probability >= {min_postselection} "
                       f"after {max_attempts} attempts")


@dataclass(frozen=True)
class CandidateResult:
    measurement: str
    labels: tuple[str, ...]
    added_measurements: int
    abl: Distribution | None
    impossible: bool
    kastner: OutcomeWeights | None
    kastner_error: str
    born_predictive: Distribution
    born_retrodictive: Distribution
    oracle: EnsembleReport | None
    verdict: Verdict | None

    @property
    def passed(self) -> bool:
        if self.impossible:
            return self.oracle is None or self.oracle.no_kept_trials
        return self.verdict is not None and self.verdict.passed


@dataclass(frozen=True)
class CounterfactualReport:
    scenario: str
    dim: int
    t_a: float
    t_b: float
    actual_record: tuple[str, ...]
    trials: int
    seed: int
    k_sigma: float
    generator: str
    candidates: tuple[CandidateResult, ...] = field(default_factory=tuple)

    @property
    def preamble(self) -> str:
        return (f"Actual record: pre-selection at t_a={self.t_a:g}, post-selection at t_b={self.t_b:g}. "
                f"Each counterfactual keeps this record and adds exactly one measurement at t_a < t < t_b.")

    @property
    def all_impossible(self) -> bool:
        return bool(self.candidates) and all(c.impossible for c in self.candidates)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.candidates)


def counterfactual_report(
    s: Scenario,
    cfg: EnsembleConfig,
    k_sigma: float = 5.0,
    run_oracle: bool = True,
    tol: Tolerances = DEFAULT,
) -> CounterfactualReport:
    """Evaluate every candidate with all analytic rules and the oracle.

    Candidate ``i`` draws its oracle trials from stream ``cfg.stream + (i,)``.
    """
    ts = s.two_state
    results = []
    for i, M in enumerate(s.candidate_measurements):
        try:
            p_abl, impossible = abl(ts, M, tol), False
        except ImpossiblePostselection:
            p_abl, impossible = None, True
        try:
            kw, k_err = kastner_rule(ts, M, tol), ""
        except ZeroOverlap as exc:
            kw, k_err = None, str(exc)
        oracle = verdict = None
        if run_oracle:
            sub = EnsembleConfig(cfg.trials, cfg.seed, Mode.PRE_AND_POSTSELECTED, cfg.stream + (i,),
                                 cfg.workers, cfg.backend)
            oracle = run_pre_post_selected(ts.pre, M, s.final_measurement, s.b_label, sub, tol)
            if p_abl is not None:
                verdict = compare(oracle, p_abl, k_sigma, tol)
        results.append(CandidateResult(
            M.name, M.labels, 1, p_abl, impossible, kw, k_err,
            born_predictive(ts.pre, M, tol), born_retrodictive(ts.post, M, tol), oracle, verdict,
        ))
    return CounterfactualReport(
        s.name, s.dim, ts.t_a, ts.t_b, ("pre@t_a", "post@t_b"), int(cfg.trials), int(cfg.seed),
        float(k_sigma), GENERATOR_ID, tuple(results),
    )


def check_closeness(report: CounterfactualReport) -> bool:
    """Every counterfactual shares the actual record and adds one measurement."""
    return report.actual_record == ("pre@t_a", "post@t_b") and all(
        c.added_measurements == 1 for c in report.candidates
    )


# --- quantum raffle ---------------------------------------------------------

RAFFLE_LABELS = ("ready", "heads", "tails")


@dataclass(frozen=True)
class RaffleScenario:
    n_coins: int
    raffle_held: bool
    alpha: complex = 1 / math.sqrt(2)
    beta: complex = 1 / math.sqrt(2)

    def __post_init__(self):
        if int(self.n_coins) < 1:
            raise ValueError(f"need at least one coin, got {self.n_coins}")
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {norm!r}, must be 1")


def flip_unitary(alpha: complex, beta: complex) -> np.ndarray:
    """Coin flip on basis (ready, heads, tails).

    ready -> alpha heads + beta tails, heads -> conj(beta) heads - conj(alpha) tails,
    tails -> ready.
    """
    a, b = complex(alpha), complex(beta)
    return np.array([
        [0, 0, 1],
        [a, b.conjugate(), 0],
        [b, -a.conjugate(), 0],
    ], dtype=np.complex128)


@dataclass(frozen=True)
class RaffleReport:
    n_coins: int
    raffle_held: bool
    alpha: complex
    beta: complex
    heads: int
    tails: int
    null: int
    p_heads: float
    p_tails: float
    p_null: float
    entrants: int
    stipulation_probability: float  # P(T = N) under the given held/not-held state
    contradiction: bool
    seed: int
    generator: str = GENERATOR_ID

    @property
    def consistent(self) -> bool:
        """No raffle means every coin reads null."""
        return self.raffle_held or self.null == self.n_coins


def quantum_raffle(cfg: RaffleScenario, seed: int = 0, backend: str | None = None) -> RaffleReport:
    """Measure {ready, heads, tails} on each of ``n_coins`` independent coins.

    Coins start in ``ready``; if the raffle is held each coin is flipped. Every
    coin that shows heads turns a prospective entrant into an entrant.
    """
    ready = Ket.basis(3, 0)
    state = Ket(flip_unitary(cfg.alpha, cfg.beta) @ ready.amp) if cfg.raffle_held else ready
    outcome = ProjectiveMeasurement.standard(3, RAFFLE_LABELS, "coin")
    probs = np.array([float(np.vdot(state.amp, P.matrix @ state.amp).real) for P in outcome.projectors])
    cdf = build_cdf([probs[None, :]])
    counts = np.zeros(3, dtype=np.int64)
    tree = SeedTree(seed)
    n = int(cfg.n_coins)
    for i, start in enumerate(range(0, n, 4096)):
        size = min(4096, n - start)
        u = tree.split(i).generator().random((size, 1))
        c, _ = simulate_chain(cdf, u, 0, n_states=3, backend=backend)
        counts += c
    p_null, p_heads, p_tails = (float(p) for p in probs)
    stip = p_tails ** n
    return RaffleReport(
        n, bool(cfg.raffle_held), complex(cfg.alpha), complex(cfg.beta),
        int(counts[1]), int(counts[2]), int(counts[0]), p_heads, p_tails, p_null,
        entrants=int(counts[1]),
        stipulation_probability=stip,
        contradiction=(not cfg.raffle_held) and p_tails == 0.0,
        seed=int(seed),
    )
