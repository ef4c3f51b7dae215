"""Numerical tolerances and backend selection, in one place."""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

ENV_STRUCTURAL = "TSQC_TOLERANCE_STRUCTURAL"
ENV_DISABLE_NUMBA = "TSQC_DISABLE_NUMBA"


@dataclass(frozen=True)
class Tolerances:
    structural: float = 1e-10  # hermiticity, idempotence, orthogonality, completeness
    aggregate: float = 1e-9  # sums of probabilities
    impossible: float = 1e-20  # squared amplitudes treated as zero
    strict_norm: float = 1e-6  # strict-mode ket norm window
    exact: float = 1e-12  # analytic p treated as exactly 0 or 1 in oracle comparisons


def _from_env() -> Tolerances:
    tol = Tolerances()
    raw = os.environ.get(ENV_STRUCTURAL)
    if raw:
        value = float(raw)
        if not value > 0:
            raise ValueError(f"{ENV_STRUCTURAL} must be positive, got {raw!r}")
        tol = replace(tol, structural=value)
    return tol


DEFAULT = _from_env()


def numba_disabled() -> bool:
    return os.environ.get(ENV_DISABLE_NUMBA, "").strip().lower() in {"1", "true", "yes", "on"}
