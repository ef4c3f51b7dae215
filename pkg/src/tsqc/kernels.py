"""Trial-sampling kernel for staged measurement chains.

A chain is a sequence of stages. Stage ``j`` maps the state reached at stage
``j-1`` (state 0 before the first stage) to a next state drawn by inverse-CDF
lookup: the next state is the first index ``i`` with ``u < cdf[j, s, i]``.
A trial is kept iff the state at ``select_stage`` equals ``select_value``
(``select_stage < 0`` keeps every trial); kept trials are tallied by their
state at ``record_stage``.

Two interchangeable implementations consume identical uniforms and return
identical counts: a numba ``@njit`` loop and a vectorized numpy version. Set
``TSQC_DISABLE_NUMBA=1`` to force the numpy path.
"""

from __future__ import annotations

import numpy as np

from tsqc.config import numba_disabled

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def build_cdf(stages: list[np.ndarray]) -> np.ndarray:
    """Pack per-stage transition matrices into a padded CDF tensor.

    ``stages[j]`` has shape (states before stage j, states after stage j);
    ``stages[0]`` must have a single row. Each row's CDF is pinned to exactly
    1.0 from its last positive entry onward, so outcomes with zero probability
    are never drawn and rounding in the row sum cannot leak past the end.
    """
    if stages[0].shape[0] != 1:
        raise ValueError("first stage must start from a single state")
    for j in range(1, len(stages)):
        if stages[j].shape[0] != stages[j - 1].shape[1]:
            raise ValueError(f"stage {j} expects {stages[j].shape[0]} input states, "
                             f"stage {j - 1} produces {stages[j - 1].shape[1]}")
    width = max(max(s.shape) for s in stages)
    cdf = np.zeros((len(stages), width, width))
    for j, probs in enumerate(stages):
        probs = np.clip(np.asarray(probs, dtype=float), 0.0, None)
        for r, row in enumerate(probs):
            positive = np.flatnonzero(row > 0.0)
            if positive.size == 0:
                continue
            c = np.cumsum(row / row.sum())
            c[positive[-1]:] = 1.0
            cdf[j, r, : c.shape[0]] = c
    return cdf


def _chain_numpy(cdf, u, record_stage, select_stage, select_value, counts):
    n, n_stages = u.shape
    state = np.zeros(n, dtype=np.int64)
    recorded = state
    keep = np.ones(n, dtype=bool)
    for j in range(n_stages):
        hit = u[:, j, None] < cdf[j, state]
        state = hit.argmax(axis=1)
        if j == record_stage:
            recorded = state
        if j == select_stage:
            keep = state == select_value
    counts += np.bincount(recorded[keep], minlength=counts.shape[0])[: counts.shape[0]]
    return int(keep.sum())


def _chain_loop(cdf, u, record_stage, select_stage, select_value, counts):
    n = u.shape[0]
    n_stages = u.shape[1]
    width = cdf.shape[2]
    kept = 0
    for t in range(n):
        s = 0
        rec = 0
        ok = True
        for j in range(n_stages):
            x = u[t, j]
            nxt = 0
            for i in range(width):
                if x < cdf[j, s, i]:
                    nxt = i
                    break
            s = nxt
            if j == record_stage:
                rec = s
            if j == select_stage and s != select_value:
                ok = False
                break
        if ok:
            counts[rec] += 1
            kept += 1
    return kept


if numba is not None:
    _chain_numba = numba.njit(cache=True, nogil=True)(_chain_loop)
else:  # pragma: no cover
    _chain_numba = None


def available_backends() -> tuple[str, ...]:
    return ("numba", "numpy") if _chain_numba is not None else ("numpy",)


def default_backend() -> str:
    if _chain_numba is None or numba_disabled():
        return "numpy"
    return "numba"


def simulate_chain(
    cdf: np.ndarray,
    u: np.ndarray,
    record_stage: int,
    select_stage: int = -1,
    select_value: int = -1,
    n_states: int | None = None,
    backend: str | None = None,
) -> tuple[np.ndarray, int]:
    """Run ``len(u)`` trials; return (counts per recorded state, kept trials)."""
    backend = backend or default_backend()
    counts = np.zeros(n_states or cdf.shape[2], dtype=np.int64)
    u = np.ascontiguousarray(u, dtype=np.float64)
    if u.shape[1] != cdf.shape[0]:
        raise ValueError(f"{u.shape[1]} uniforms per trial for {cdf.shape[0]} stages")
    if backend == "numba":
        if _chain_numba is None:
            raise RuntimeError("numba backend unavailable")
        kept = _chain_numba(cdf, u, record_stage, select_stage, select_value, counts)
    elif backend == "numpy":
        kept = _chain_numpy(cdf, u, record_stage, select_stage, select_value, counts)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return counts, int(kept)
