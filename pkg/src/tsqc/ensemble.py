"""Monte Carlo oracle: simulate runs, discard those failing the selections.

Every run is simulated the way the experiment would be done: prepare, measure
the intermediate observable, collapse onto the observed outcome, measure the
final observable, and keep the run only if the selection criteria hold. No
analytic rule from :mod:`tsqc.rules` is consulted; transition probabilities
come straight from projecting and renormalizing states.

Trials are split into blocks of ``BLOCK_SIZE``. Block ``i`` draws its uniforms
from stream ``cfg.stream + (i,)`` of the seed tree and the per-block integer
counts are summed, so the report does not depend on the number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from tsqc.config import DEFAULT, Tolerances
from tsqc.errors import DimensionMismatch, LabelMismatch, RankError
from tsqc.hilbert import Ket, ProjectiveMeasurement, apply_projector, normalize, require_valid
from tsqc.kernels import build_cdf, default_backend, simulate_chain
from tsqc.rng import GENERATOR_ID, SeedTree
from tsqc.rules import Distribution

BLOCK_SIZE = 4096


class Mode(str, Enum):
    PRESELECTED = "preselected"
    POSTSELECTED = "postselected"
    PRE_AND_POSTSELECTED = "pre_and_postselected"


@dataclass(frozen=True)
class EnsembleConfig:
    trials: int
    seed: int
    mode: Mode = Mode.PRE_AND_POSTSELECTED
    stream: tuple[int, ...] = ()
    workers: int = 1
    backend: str | None = None

    def __post_init__(self):
        if int(self.trials) < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if int(self.workers) < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        object.__setattr__(self, "mode", Mode(self.mode))
        SeedTree(self.seed, self.stream)  # validates the seed range


@dataclass(frozen=True)
class OutcomeStat:
    label: str
    count: int
    frequency: float
    std_error: float


@dataclass(frozen=True)
class EnsembleReport:
    mode: Mode
    trials_total: int
    trials_kept: int
    outcomes: tuple[OutcomeStat, ...]
    seed: int
    stream: tuple[int, ...] = ()
    generator: str = GENERATOR_ID
    block_size: int = BLOCK_SIZE

    @property
    def no_kept_trials(self) -> bool:
        return self.trials_kept == 0

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(o.label for o in self.outcomes)

    def __getitem__(self, label: str) -> OutcomeStat:
        for o in self.outcomes:
            if o.label == label:
                return o
        raise KeyError(label)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "trials_total": self.trials_total,
            "trials_kept": self.trials_kept,
            "no_kept_trials": self.no_kept_trials,
            "seed": self.seed,
            "stream": list(self.stream),
            "generator": self.generator,
            "block_size": self.block_size,
            "outcomes": [
                {"label": o.label, "count": o.count, "frequency": o.frequency, "std_error": o.std_error}
                for o in self.outcomes
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> EnsembleReport:
        return cls(
            mode=Mode(d["mode"]),
            trials_total=int(d["trials_total"]),
            trials_kept=int(d["trials_kept"]),
            outcomes=tuple(OutcomeStat(o["label"], int(o["count"]), float(o["frequency"]), float(o["std_error"]))
                           for o in d["outcomes"]),
            seed=int(d["seed"]),
            stream=tuple(d.get("stream", ())),
            generator=d.get("generator", GENERATOR_ID),
            block_size=int(d.get("block_size", BLOCK_SIZE)),
        )


def _make_report(cfg: EnsembleConfig, labels, counts: np.ndarray, kept: int) -> EnsembleReport:
    stats = []
    for label, c in zip(labels, counts):
        c = int(c)
        f = c / kept if kept else 0.0
        se = math.sqrt(f * (1.0 - f) / kept) if kept else 0.0
        stats.append(OutcomeStat(label, c, f, se))
    return EnsembleReport(cfg.mode, int(cfg.trials), int(kept), tuple(stats), int(cfg.seed), tuple(cfg.stream))


def _run_chain(cfg: EnsembleConfig, stages, record_stage, select_stage, select_value, n_states, state_to_outcome):
    cdf = build_cdf(stages)
    n_stages = len(stages)
    root = SeedTree(cfg.seed, cfg.stream)
    n_blocks = -(-int(cfg.trials) // BLOCK_SIZE)
    backend = cfg.backend or default_backend()

    def block(i: int):
        size = min(BLOCK_SIZE, int(cfg.trials) - i * BLOCK_SIZE)
        u = root.split(i).generator().random((size, n_stages))
        return simulate_chain(cdf, u, record_stage, select_stage, select_value, n_states, backend)

    if cfg.workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(block, range(n_blocks)))
    else:
        results = [block(i) for i in range(n_blocks)]

    state_counts = np.zeros(n_states, dtype=np.int64)
    kept = 0
    for c, k in results:
        state_counts += c
        kept += k
    n_out = int(state_to_outcome.max()) + 1
    counts = np.zeros(n_out, dtype=np.int64)
    np.add.at(counts, state_to_outcome, state_counts)
    return counts, kept


def _outcome_weights(state: Ket, M: ProjectiveMeasurement) -> np.ndarray:
    return np.array([apply_projector(P, state)[1] for P in M.projectors])


def _collapse_table(states: list[Ket], M: ProjectiveMeasurement, F: ProjectiveMeasurement):
    """Rows indexed (state, outcome of M): P(M outcome) and P(F outcome | collapsed)."""
    first = np.zeros((len(states), len(M)))
    then = np.zeros((len(states) * len(M), len(F)))
    for s, ket in enumerate(states):
        for k, P in enumerate(M.projectors):
            vec, w = apply_projector(P, ket)
            first[s, k] = w
            if w <= 1e-20:
                continue
            then[s * len(M) + k] = _outcome_weights(normalize(vec), F)
    return first, then


def _check_final(M: ProjectiveMeasurement, F: ProjectiveMeasurement, b_label: str, tol: Tolerances) -> int:
    if F.dim != M.dim:
        raise DimensionMismatch(f"final measurement dim {F.dim} vs intermediate dim {M.dim}")
    require_valid(F, tol)
    if b_label not in F.labels:
        raise LabelMismatch(f"final measurement {F.name!r} has no outcome {b_label!r}")
    if F[b_label].rank != 1:
        raise RankError(f"post-selection projector {b_label!r} has rank {F[b_label].rank}, need 1")
    return F.index(b_label)


def _require_mode(cfg: EnsembleConfig, mode: Mode) -> None:
    if cfg.mode is not mode:
        raise ValueError(f"config mode {cfg.mode.value!r} does not match {mode.value!r}")


def run_preselected(a: Ket, M: ProjectiveMeasurement, cfg: EnsembleConfig, tol: Tolerances = DEFAULT) -> EnsembleReport:
    """Every run starts in ``a`` and measures ``M``; nothing is discarded."""
    _require_mode(cfg, Mode.PRESELECTED)
    if a.dim != M.dim:
        raise DimensionMismatch(f"ket dim {a.dim} vs measurement dim {M.dim}")
    require_valid(M, tol)
    stages = [_outcome_weights(a, M)[None, :]]
    counts, kept = _run_chain(cfg, stages, 0, -1, -1, len(M), np.arange(len(M)))
    return _make_report(cfg, M.labels, counts, kept)


def run_pre_post_selected(
    a: Ket,
    M: ProjectiveMeasurement,
    F: ProjectiveMeasurement,
    b_label: str,
    cfg: EnsembleConfig,
    tol: Tolerances = DEFAULT,
) -> EnsembleReport:
    """Prepare ``a``, measure ``M``, collapse, measure ``F``; keep runs ending in ``b_label``."""
    _require_mode(cfg, Mode.PRE_AND_POSTSELECTED)
    if a.dim != M.dim:
        raise DimensionMismatch(f"ket dim {a.dim} vs measurement dim {M.dim}")
    require_valid(M, tol)
    b_index = _check_final(M, F, b_label, tol)
    first, then = _collapse_table([a], M, F)
    counts, kept = _run_chain(cfg, [first, then], 0, 1, b_index, len(M), np.arange(len(M)))
    return _make_report(cfg, M.labels, counts, kept)


def run_postselected(
    M: ProjectiveMeasurement,
    F: ProjectiveMeasurement,
    b_label: str,
    cfg: EnsembleConfig,
    tol: Tolerances = DEFAULT,
) -> EnsembleReport:
    """Maximally mixed preparation, then as :func:`run_pre_post_selected`.

    The mixed state is realized by drawing a uniformly random element of the
    standard basis on every run.
    """
    _require_mode(cfg, Mode.POSTSELECTED)
    require_valid(M, tol)
    b_index = _check_final(M, F, b_label, tol)
    d, K = M.dim, len(M)
    prep = np.full((1, d), 1.0 / d)
    first, then = _collapse_table([Ket.basis(d, r) for r in range(d)], M, F)
    # stage 2 state is the flattened (reference state, M outcome) pair
    spread = np.zeros((d, d * K))
    for r in range(d):
        spread[r, r * K:(r + 1) * K] = first[r]
    state_to_outcome = np.arange(d * K) % K
    counts, kept = _run_chain(cfg, [prep, spread, then], 1, 2, b_index, d * K, state_to_outcome)
    return _make_report(cfg, M.labels, counts, kept)


@dataclass(frozen=True)
class OutcomeComparison:
    label: str
    frequency: float
    probability: float
    deviation: float
    bound: float
    exact_rule: bool
    passed: bool


@dataclass(frozen=True)
class Verdict:
    passed: bool
    k_sigma: float
    trials_kept: int
    outcomes: tuple[OutcomeComparison, ...] = field(default_factory=tuple)
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "k_sigma": self.k_sigma,
            "trials_kept": self.trials_kept,
            "reason": self.reason,
            "outcomes": [vars(o).copy() for o in self.outcomes],
        }


def compare(
    report: EnsembleReport, analytic: Distribution, k_sigma: float = 5.0, tol: Tolerances = DEFAULT
) -> Verdict:
    """Check oracle frequencies against analytic probabilities.

    Outcome k passes if ``|f_k - p_k| <= k_sigma * sqrt(p_k (1 - p_k) / kept)``,
    the binomial standard error under the analytic hypothesis. Probabilities
    within ``tol.exact`` of 0 or 1 instead demand exact counts (none or all).
    """
    if report.labels != analytic.labels:
        raise LabelMismatch(f"report labels {report.labels} vs analytic labels {analytic.labels}")
    n = report.trials_kept
    if n == 0:
        return Verdict(False, k_sigma, 0, reason="no kept trials")
    rows = []
    for stat, p in zip(report.outcomes, analytic.probs):
        p = float(p)
        dev = abs(stat.frequency - p)
        if p <= tol.exact:
            exact, bound, ok = True, 0.0, stat.count == 0
        elif p >= 1.0 - tol.exact:
            exact, bound, ok = True, 0.0, stat.count == n
        else:
            exact = False
            bound = k_sigma * math.sqrt(p * (1.0 - p) / n)
            ok = dev <= bound
        rows.append(OutcomeComparison(stat.label, stat.frequency, p, dev, bound, exact, ok))
    passed = all(r.passed for r in rows)
    failed = [r.label for r in rows if not r.passed]
    return Verdict(passed, k_sigma, n, tuple(rows), "" if passed else f"outside bound: {', '.join(failed)}")


def postselection_probability(a: Ket, M: ProjectiveMeasurement, b: Ket) -> float:
    """Probability that a run prepared in ``a`` survives the post-selection on ``b``.

    sum_k p_Born(k) |<b|normalize(P_k a)>|^2, summed branch by branch.
    """
    total = 0.0
    for P in M.projectors:
        vec, w = apply_projector(P, a)
        if w <= 1e-20:
            continue
        amp = np.vdot(b.amp, normalize(vec).amp)
        total += w * float((amp * amp.conjugate()).real)
    return total
