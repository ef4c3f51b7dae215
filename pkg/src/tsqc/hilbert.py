"""Finite-dimensional complex linear algebra: kets, projectors, measurements.

All objects are immutable; their numpy buffers are marked read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from tsqc.config import DEFAULT, Tolerances
from tsqc.errors import DimensionMismatch, InvalidMeasurement, ValidationError, ZeroVector

_ZERO_NORM_SQ = 1e-20


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.flags.writeable = False
    return arr


def _check_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what} contains NaN or inf", invariant="finite")


@dataclass(frozen=True, eq=False)
class Ket:
    """Normalized state vector.

    The constructor normalizes its input and keeps the factor it applied in
    ``scale``. With ``strict=True`` inputs whose norm lies outside
    ``1 +/- tol.strict_norm`` are rejected instead.
    """

    amp: np.ndarray
    scale: float = field(default=1.0)

    def __init__(self, amp: Iterable[complex], *, strict: bool = False, tol: Tolerances = DEFAULT):
        vec = np.asarray(list(amp) if not isinstance(amp, np.ndarray) else amp, dtype=np.complex128)
        if vec.ndim != 1:
            raise DimensionMismatch(f"ket must be one-dimensional, got shape {vec.shape}")
        if vec.shape[0] < 2:
            raise DimensionMismatch(f"ket dimension must be >= 2, got {vec.shape[0]}")
        _check_finite(vec, "ket")
        norm_sq = float(np.vdot(vec, vec).real)
        if norm_sq <= _ZERO_NORM_SQ:
            raise ZeroVector(f"cannot normalize vector with squared norm {norm_sq:.3e}")
        norm = np.sqrt(norm_sq)
        if strict and abs(norm - 1.0) > tol.strict_norm:
            raise ValidationError(
                f"ket norm {norm!r} outside strict window", invariant="norm", deviation=abs(norm - 1.0)
            )
        object.__setattr__(self, "amp", _frozen(vec / norm))
        object.__setattr__(self, "scale", 1.0 / norm)

    @property
    def dim(self) -> int:
        return self.amp.shape[0]

    @classmethod
    def basis(cls, dim: int, index: int) -> Ket:
        vec = np.zeros(dim, dtype=np.complex128)
        vec[index] = 1.0
        return cls(vec)

    def bra(self) -> np.ndarray:
        return self.amp.conj()

    def outer(self) -> np.ndarray:
        return np.outer(self.amp, self.amp.conj())

    def __repr__(self) -> str:
        return f"Ket({np.array2string(self.amp, precision=6)})"


def inner(x: Ket, y: Ket) -> complex:
    """Return <x|y>."""
    if x.dim != y.dim:
        raise DimensionMismatch(f"inner product of dim {x.dim} and dim {y.dim} kets")
    return complex(np.vdot(x.amp, y.amp))


def normalize(vector: Sequence[complex] | np.ndarray) -> Ket:
    vec = np.asarray(vector, dtype=np.complex128)
    norm_sq = float(np.vdot(vec, vec).real)
    if norm_sq <= _ZERO_NORM_SQ:
        raise ZeroVector(f"squared norm {norm_sq:.3e} is below 1e-20")
    return Ket(vec)


@dataclass(frozen=True, eq=False)
class Projector:
    """Orthogonal projector with a label.

    Hermiticity and idempotence are checked on construction unless
    ``check=False``, which exists so that malformed inputs can still be fed to
    :func:`validate_measurement` for a full report.
    """

    matrix: np.ndarray
    label: str

    def __init__(self, matrix, label: str, *, check: bool = True, tol: Tolerances = DEFAULT):
        mat = np.asarray(matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatch(f"projector must be square, got shape {mat.shape}")
        _check_finite(mat, f"projector {label!r}")
        object.__setattr__(self, "matrix", _frozen(mat))
        object.__setattr__(self, "label", str(label))
        if check:
            dev = _max_dev(mat, mat.conj().T)
            if dev > tol.structural:
                raise ValidationError(f"projector {label!r} is not Hermitian", "hermiticity", dev)
            dev = _max_dev(mat @ mat, mat)
            if dev > tol.structural:
                raise ValidationError(f"projector {label!r} is not idempotent", "idempotence", dev)

    @classmethod
    def from_kets(cls, kets: Iterable[Ket], label: str) -> Projector:
        """Projector onto the span of mutually orthonormal kets."""
        kets = list(kets)
        if not kets:
            raise ValueError("projector needs at least one ket")
        mat = sum(k.outer() for k in kets)
        return cls(mat, label)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return int(round(float(np.trace(self.matrix).real)))

    def eigenket(self) -> Ket:
        """The unit ket spanning a rank-1 projector (phase fixed by the largest entry)."""
        col = int(np.argmax(np.abs(np.diag(self.matrix))))
        return Ket(self.matrix[:, col])


def _max_dev(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def apply_projector(P: Projector, x: Ket) -> tuple[np.ndarray, float]:
    """Return ``(P x, ||P x||^2)``; the vector is left unnormalized."""
    if P.dim != x.dim:
        raise DimensionMismatch(f"projector dim {P.dim} applied to ket dim {x.dim}")
    vec = P.matrix @ x.amp
    return vec, float(np.vdot(vec, vec).real)


@dataclass(frozen=True, eq=False)
class ProjectiveMeasurement:
    """A labeled set of projectors.

    Construction only checks shapes and label uniqueness; the physical
    invariants are reported by :func:`validate_measurement` and enforced by
    :func:`require_valid` at the point of use.
    """

    projectors: tuple[Projector, ...]
    name: str

    def __init__(self, projectors: Iterable[Projector], name: str = "M"):
        projectors = tuple(projectors)
        if not projectors:
            raise InvalidMeasurement("measurement has no projectors", "outcome_count", 0.0)
        dims = {p.dim for p in projectors}
        if len(dims) != 1:
            raise DimensionMismatch(f"projectors of mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "projectors", projectors)
        object.__setattr__(self, "name", str(name))

    @property
    def dim(self) -> int:
        return self.projectors[0].dim

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(p.label for p in self.projectors)

    def __len__(self) -> int:
        return len(self.projectors)

    def __getitem__(self, label: str) -> Projector:
        for p in self.projectors:
            if p.label == label:
                return p
        raise KeyError(label)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    @classmethod
    def from_basis(
        cls, basis: Sequence[Ket], labels: Sequence[str] | None = None, name: str = "M"
    ) -> ProjectiveMeasurement:
        """Nondegenerate measurement: one rank-1 projector per basis ket."""
        if labels is None:
            labels = [f"q{i}" for i in range(len(basis))]
        if len(labels) != len(basis):
            raise ValueError("one label per basis ket required")
        return cls((Projector.from_kets([k], lab) for k, lab in zip(basis, labels)), name)

    @classmethod
    def from_partition(
        cls,
        basis: Sequence[Ket],
        basis_labels: Sequence[str],
        groups: Sequence[Sequence[str]] | Mapping[str, Sequence[str]],
        name: str = "M",
    ) -> ProjectiveMeasurement:
        """Compile a partition of a labeled orthonormal basis into projectors.

        ``groups`` is either a mapping ``outcome label -> basis labels`` or a
        list of basis-label groups, in which case each outcome is labeled by
        joining its members with ``+``.
        """
        if len(basis) != len(basis_labels):
            raise ValueError("one label per basis ket required")
        lookup = dict(zip(basis_labels, basis))
        if len(lookup) != len(basis_labels):
            raise ValueError("basis labels must be unique")
        if isinstance(groups, Mapping):
            items = [(str(k), list(v)) for k, v in groups.items()]
        else:
            items = [("+".join(g), list(g)) for g in groups]
        projectors = []
        for label, members in items:
            missing = [m for m in members if m not in lookup]
            if missing:
                raise KeyError(f"unknown basis labels {missing} in group {label!r}")
            projectors.append(Projector.from_kets([lookup[m] for m in members], label))
        return cls(projectors, name)

    @classmethod
    def standard(cls, dim: int, labels: Sequence[str] | None = None, name: str = "Z") -> ProjectiveMeasurement:
        return cls.from_basis([Ket.basis(dim, i) for i in range(dim)], labels, name)


@dataclass(frozen=True)
class Violation:
    invariant: str
    deviation: float
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid

    def names(self) -> list[str]:
        return [v.invariant for v in self.violations]

    def describe(self) -> str:
        if self.valid:
            return "valid"
        return "; ".join(f"{v.invariant} (max deviation {v.deviation:.3e}){' ' + v.detail if v.detail else ''}"
                         for v in self.violations)


def validate_measurement(
    M: ProjectiveMeasurement, tol: Tolerances = DEFAULT, min_outcomes: int = 2
) -> ValidationReport:
    """List every violated invariant of ``M`` with its maximum deviation."""
    out: list[Violation] = []
    mats = [p.matrix for p in M.projectors]

    if len(set(M.labels)) != len(M.labels):
        dupes = sorted({lab for lab in M.labels if M.labels.count(lab) > 1})
        out.append(Violation("unique_labels", float(len(M.labels) - len(set(M.labels))), f"duplicates {dupes}"))
    if len(mats) < min_outcomes:
        out.append(Violation("outcome_count", float(min_outcomes - len(mats)),
                             f"{len(mats)} projector(s), need >= {min_outcomes}"))

    herm = max(_max_dev(m, m.conj().T) for m in mats)
    if herm > tol.structural:
        out.append(Violation("hermiticity", herm))
    idem = max(_max_dev(m @ m, m) for m in mats)
    if idem > tol.structural:
        out.append(Violation("idempotence", idem))
    orth = 0.0
    for j in range(len(mats)):
        for k in range(j + 1, len(mats)):
            orth = max(orth, float(np.max(np.abs(mats[j] @ mats[k]))))
    if orth > tol.structural:
        out.append(Violation("orthogonality", orth))
    comp = _max_dev(sum(mats), np.eye(M.dim))
    if comp > tol.structural:
        out.append(Violation("completeness", comp))
    return ValidationReport(tuple(out))


def require_valid(M: ProjectiveMeasurement, tol: Tolerances = DEFAULT, min_outcomes: int = 2) -> None:
    report = validate_measurement(M, tol, min_outcomes)
    if not report.valid:
        first = report.violations[0]
        raise InvalidMeasurement(
            f"measurement {M.name!r} invalid: {report.describe()}", first.invariant, first.deviation
        )


@dataclass(frozen=True, eq=False)
class TwoState:
    """Pre-selected ket at ``t_a`` and post-selected ket at ``t_b``.

    Times only order the two selections; no evolution is attached to them.
    """

    pre: Ket
    post: Ket
    t_a: float = 0.0
    t_b: float = 1.0

    def __post_init__(self):
        if self.pre.dim != self.post.dim:
            raise DimensionMismatch(f"pre dim {self.pre.dim} != post dim {self.post.dim}")
        if not self.t_a < self.t_b:
            raise ValidationError(f"need t_a < t_b, got {self.t_a} >= {self.t_b}", "time_order", 0.0)

    @property
    def dim(self) -> int:
        return self.pre.dim

    def reversed(self) -> TwoState:
        """Swap the roles of the two kets, keeping the times."""
        return TwoState(self.post, self.pre, self.t_a, self.t_b)


def random_ket(dim: int, rng: np.random.Generator) -> Ket:
    """Haar-random ket from a normalized complex Gaussian draw."""
    return Ket(rng.standard_normal(dim) + 1j * rng.standard_normal(dim))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with the phase correction of Mezzadri."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def basis_containing(ket: Ket, rng: np.random.Generator) -> list[Ket]:
    """Random orthonormal basis whose first element is exactly ``ket``."""
    dim = ket.dim
    cols = np.column_stack([ket.amp, random_unitary(dim, rng)[:, : dim - 1]])
    q, _ = np.linalg.qr(cols)
    kets = [ket] + [Ket(q[:, i]) for i in range(1, dim)]
    return kets
