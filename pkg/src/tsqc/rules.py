"""Analytic probability rules for measurements between two selections.

``born_predictive`` and ``born_retrodictive`` condition on one selection, ``abl``
on both. ``kastner_rule`` is the rival conditional rule whose denominator is the
bare transition probability |<b|a>|^2, i.e. it keeps the cross terms
``<b|P_j|a>* <b|P_k|a>`` (j != k) that the ABL denominator drops. The formula is
a reconstruction from its verbal description (numerator assumes the
intermediate measurement is made, denominator assumes it is not); its outputs
need not sum to one, which is the point of implementing it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from tsqc.config import DEFAULT, Tolerances
from tsqc.errors import DimensionMismatch, ImpossiblePostselection, ZeroOverlap
from tsqc.hilbert import Ket, ProjectiveMeasurement, TwoState, apply_projector, require_valid


@dataclass(frozen=True, eq=False)
class Distribution:
    labels: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != probs.shape[0]:
            raise ValueError("labels and probabilities differ in length")

    def __getitem__(self, label: str) -> float:
        return float(self.probs[self.labels.index(label)])

    def __iter__(self) -> Iterator[tuple[str, float]]:
        return iter(zip(self.labels, map(float, self.probs)))

    def __len__(self) -> int:
        return len(self.labels)

    def total(self) -> float:
        return float(self.probs.sum())

    def as_dict(self) -> dict[str, float]:
        return dict(self)


@dataclass(frozen=True, eq=False)
class OutcomeWeights:
    """Nonnegative weights that may or may not form a distribution."""

    labels: tuple[str, ...]
    weights: np.ndarray
    normalized: bool

    def __getitem__(self, label: str) -> float:
        return float(self.weights[self.labels.index(label)])

    def __iter__(self) -> Iterator[tuple[str, float]]:
        return iter(zip(self.labels, map(float, self.weights)))

    def total(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))


def _check_dims(ket: Ket, M: ProjectiveMeasurement) -> None:
    if ket.dim != M.dim:
        raise DimensionMismatch(f"ket dim {ket.dim} vs measurement dim {M.dim}")


def _born(ket: Ket, M: ProjectiveMeasurement, tol: Tolerances) -> Distribution:
    _check_dims(ket, M)
    require_valid(M, tol)
    weights = np.array([apply_projector(P, ket)[1] for P in M.projectors])
    return Distribution(M.labels, weights)


def born_predictive(a: Ket, M: ProjectiveMeasurement, tol: Tolerances = DEFAULT) -> Distribution:
    """Outcome probabilities given only the earlier selection ``a``."""
    return _born(a, M, tol)


def born_retrodictive(b: Ket, M: ProjectiveMeasurement, tol: Tolerances = DEFAULT) -> Distribution:
    """Outcome probabilities given only the later selection ``b``.

    For rank-1 projectors |q><q| this is |<b|q>|^2.
    """
    return _born(b, M, tol)


def transition_amplitudes(ts: TwoState, M: ProjectiveMeasurement) -> np.ndarray:
    """<b|P_k|a> for every projector, in measurement order."""
    _check_dims(ts.pre, M)
    return np.array([np.vdot(ts.post.amp, P.matrix @ ts.pre.amp) for P in M.projectors])


def joint_weights(ts: TwoState, M: ProjectiveMeasurement) -> np.ndarray:
    """|<b|P_k|a>|^2: probability of intermediate outcome k followed by b, given a."""
    amps = transition_amplitudes(ts, M)
    return (amps * amps.conj()).real


def abl(ts: TwoState, M: ProjectiveMeasurement, tol: Tolerances = DEFAULT) -> Distribution:
    """ABL probabilities p_k = |<b|P_k|a>|^2 / sum_j |<b|P_j|a>|^2.

    Degenerate outcomes use the projector form; for rank-1 projectors this is
    the usual |<a|q_k><q_k|b>|^2 normalized over k.
    """
    require_valid(M, tol)
    num = joint_weights(ts, M)
    denom = float(num.sum())
    if denom <= tol.impossible:
        raise ImpossiblePostselection(
            f"pre/post pair cannot co-occur with measurement {M.name!r} (denominator {denom:.3e})"
        )
    return Distribution(M.labels, num / denom)


def kastner_rule(ts: TwoState, M: ProjectiveMeasurement, tol: Tolerances = DEFAULT) -> OutcomeWeights:
    """w_k = |<b|P_k|a>|^2 / |<b|a>|^2, returned without renormalization."""
    require_valid(M, tol, min_outcomes=1)
    overlap = np.vdot(ts.post.amp, ts.pre.amp)
    denom = float((overlap * overlap.conjugate()).real)
    if denom <= tol.impossible:
        raise ZeroOverlap(f"|<b|a>|^2 = {denom:.3e}; rule undefined")
    w = joint_weights(ts, M) / denom
    w.flags.writeable = False
    return OutcomeWeights(M.labels, w, bool(abs(w.sum() - 1.0) <= tol.aggregate))


def mixture_at_t(a: Ket, M: ProjectiveMeasurement, tol: Tolerances = DEFAULT) -> DensityMatrix:
    """sum_k P_k |a><a| P_k: the state at t if M is made and its outcome ignored."""
    _check_dims(a, M)
    require_valid(M, tol)
    rho = np.zeros((a.dim, a.dim), dtype=np.complex128)
    for P in M.projectors:
        v, _ = apply_projector(P, a)
        rho += np.outer(v, v.conj())
    rho.flags.writeable = False
    return DensityMatrix(rho)
