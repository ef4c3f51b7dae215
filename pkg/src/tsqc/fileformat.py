"""Scenario files and report documents (JSON).

Complex numbers are two-element ``[re, im]`` arrays. Floats in report
documents are written with 17 significant digits so every value round-trips
exactly.

Scenario file, format_version 1::

    {
      "format_version": 1,
      "name": "three_holes",
      "dim": 3,
      "basis_labels": ["hole1", "hole2", "hole3"],
      "pre":  [[1, 0], [1, 0], [1, 0]],
      "post": [[1, 0], [1, 0], [-1, 0]],
      "t_a": 0.0, "t_b": 1.0,
      "measurements": [
        {"name": "M1", "partition": [["hole1"], ["hole2", "hole3"]]},
        {"name": "X", "projectors": [{"label": "p", "matrix": [[[1, 0], ...], ...]}, ...]}
      ],
      "final": {"basis": [[[1, 0], [1, 0], [-1, 0]], ...], "labels": ["B", ...], "b_label": "B"}
    }

A partition refers to ``basis_labels`` (the standard basis unless
``"basis"`` is given alongside it); group labels default to the members
joined by ``+`` and may be overridden with ``"labels"``.
"""

from __future__ import annotations

import datetime as _dt
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from tsqc.config import DEFAULT, Tolerances
from tsqc.ensemble import BLOCK_SIZE, EnsembleReport, OutcomeComparison, Verdict
from tsqc.errors import ParseError, TSQCError, ValidationError
from tsqc.hilbert import Ket, Projector, ProjectiveMeasurement, TwoState
from tsqc.rules import Distribution, OutcomeWeights
from tsqc.scenarios import CandidateResult, CounterfactualReport, Scenario

FORMAT_VERSION = 1
REPORT_FORMAT_VERSION = 1


# --- JSON writing -----------------------------------------------------------

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x!r}")
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text with every float at 17 significant digits."""

    def enc(o: Any, level: int) -> str:
        pad = "\n" + " " * (indent * (level + 1))
        end = "\n" + " " * (indent * level)
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            return _fmt_float(float(o))
        if isinstance(o, str):
            return json.dumps(o, ensure_ascii=False)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{json.dumps(str(k), ensure_ascii=False)}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{" + pad + ("," + pad).join(items) + end + "}"
        if isinstance(o, (list, tuple)):
            if not o:
                return "[]"
            if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[" + pad + ("," + pad).join(enc(v, level + 1) for v in o) + end + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj, 0) + "\n"


def complex_to_json(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def ket_to_json(vec) -> list[list[float]]:
    return [complex_to_json(z) for z in np.asarray(vec)]


# --- scenario files ---------------------------------------------------------

def _req(d: dict, key: str, where: str):
    if not isinstance(d, dict):
        raise ParseError("expected an object", where)
    if key not in d:
        raise ParseError(f"missing field {key!r}", where)
    return d[key]


def _number(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"expected a number, got {v!r}", where)
    return float(v)


def _complex(v, where: str) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, list) and len(v) == 2:
        return complex(_number(v[0], where + "[0]"), _number(v[1], where + "[1]"))
    raise ParseError(f"expected [re, im], got {v!r}", where)


def _vector(v, dim: int, where: str) -> np.ndarray:
    if not isinstance(v, list):
        raise ParseError("expected a list of [re, im] amplitudes", where)
    if len(v) != dim:
        raise ParseError(f"expected {dim} amplitudes, got {len(v)}", where)
    return np.array([_complex(z, f"{where}[{i}]") for i, z in enumerate(v)])


def _ket(v, dim: int, where: str) -> Ket:
    vec = _vector(v, dim, where)
    try:
        return Ket(vec)
    except TSQCError as exc:
        raise ParseError(str(exc), where) from exc


def _matrix(v, dim: int, where: str) -> np.ndarray:
    if not isinstance(v, list) or len(v) != dim:
        raise ParseError(f"expected {dim} rows", where)
    return np.array([_vector(row, dim, f"{where}[{i}]") for i, row in enumerate(v)])


def _labels(v, n: int, where: str) -> list[str]:
    if not isinstance(v, list) or len(v) != n or not all(isinstance(x, str) for x in v):
        raise ParseError(f"expected {n} string labels", where)
    if len(set(v)) != n:
        raise ParseError("labels must be unique", where)
    return list(v)


def _measurement(m, dim: int, basis: list[Ket], basis_labels: list[str], where: str) -> ProjectiveMeasurement:
    name = _req(m, "name", where)
    if not isinstance(name, str):
        raise ParseError("name must be a string", where + ".name")
    if "partition" in m:
        groups = m["partition"]
        gw = where + ".partition"
        if not isinstance(groups, list) or not groups:
            raise ParseError("expected a non-empty list of label groups", gw)
        mb, ml = basis, basis_labels
        if "basis" in m:
            bw = where + ".basis"
            if not isinstance(m["basis"], list) or len(m["basis"]) != dim:
                raise ParseError(f"expected {dim} basis kets", bw)
            mb = [_ket(k, dim, f"{bw}[{i}]") for i, k in enumerate(m["basis"])]
        for i, g in enumerate(groups):
            if not isinstance(g, list) or not g:
                raise ParseError("expected a non-empty list of basis labels", f"{gw}[{i}]")
            for j, lab in enumerate(g):
                if lab not in ml:
                    raise ParseError(f"unknown basis label {lab!r}", f"{gw}[{i}][{j}]")
        if "labels" in m:
            outcome_labels = _labels(m["labels"], len(groups), where + ".labels")
            grouping = dict(zip(outcome_labels, groups))
        else:
            grouping = groups
        try:
            return ProjectiveMeasurement.from_partition(mb, ml, grouping, name)
        except ValidationError:
            raise
        except (TSQCError, KeyError, ValueError) as exc:
            raise ParseError(str(exc), gw) from exc
    if "projectors" in m:
        pw = where + ".projectors"
        plist = m["projectors"]
        if not isinstance(plist, list) or not plist:
            raise ParseError("expected a non-empty list of projectors", pw)
        projectors = []
        for i, p in enumerate(plist):
            label = _req(p, "label", f"{pw}[{i}]")
            mat = _matrix(_req(p, "matrix", f"{pw}[{i}]"), dim, f"{pw}[{i}].matrix")
            projectors.append(Projector(mat, str(label), check=False))
        return ProjectiveMeasurement(projectors, name)
    raise ParseError("measurement needs 'partition' or 'projectors'", where)


def scenario_from_dict(d: dict) -> Scenario:
    """Build a :class:`Scenario`; structural problems raise ParseError with a field path,
    physical invariant violations raise ValidationError."""
    if not isinstance(d, dict):
        raise ParseError("top level must be an object", "$")
    version = _req(d, "format_version", "$")
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {version!r}", "format_version")
    dim = _req(d, "dim", "$")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 2:
        raise ParseError("dim must be an integer >= 2", "dim")
    basis_labels = _labels(d.get("basis_labels", [f"e{i}" for i in range(dim)]), dim, "basis_labels")
    basis = [Ket.basis(dim, i) for i in range(dim)]
    pre = _ket(_req(d, "pre", "$"), dim, "pre")
    post = _ket(_req(d, "post", "$"), dim, "post")
    t_a = _number(d.get("t_a", 0.0), "t_a")
    t_b = _number(d.get("t_b", 1.0), "t_b")
    ms = _req(d, "measurements", "$")
    if not isinstance(ms, list) or not ms:
        raise ParseError("expected a non-empty list", "measurements")
    candidates = [_measurement(m, dim, basis, basis_labels, f"measurements[{i}]") for i, m in enumerate(ms)]
    final = _req(d, "final", "$")
    fb = _req(final, "basis", "final")
    if not isinstance(fb, list) or not fb:
        raise ParseError("expected a list of kets", "final.basis")
    fkets = [_ket(k, dim, f"final.basis[{i}]") for i, k in enumerate(fb)]
    flabels = _labels(final.get("labels", [f"f{i}" for i in range(len(fkets))]), len(fkets), "final.labels")
    b_label = _req(final, "b_label", "final")
    if b_label not in flabels:
        raise ParseError(f"b_label {b_label!r} is not one of {flabels}", "final.b_label")
    F = ProjectiveMeasurement.from_basis(fkets, flabels, d.get("final_name", "final"))
    return Scenario(
        str(d.get("name", "scenario")),
        TwoState(pre, post, t_a, t_b),
        tuple(candidates),
        F,
        b_label,
        notes=str(d.get("notes", "")),
        basis_labels=tuple(basis_labels),
    )


def load_scenario(path: str | Path) -> Scenario:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from exc
    return scenario_from_dict(data)


def scenario_to_dict(s: Scenario) -> dict:
    """Serialize with explicit projector matrices, which any scenario can be expressed as."""
    F = s.final_measurement
    return {
        "format_version": FORMAT_VERSION,
        "name": s.name,
        "dim": s.dim,
        "basis_labels": list(s.basis_labels) or [f"e{i}" for i in range(s.dim)],
        "pre": ket_to_json(s.two_state.pre.amp),
        "post": ket_to_json(s.two_state.post.amp),
        "t_a": s.two_state.t_a,
        "t_b": s.two_state.t_b,
        "measurements": [
            {
                "name": M.name,
                "projectors": [
                    {"label": P.label, "matrix": [ket_to_json(row) for row in P.matrix]} for P in M.projectors
                ],
            }
            for M in s.candidate_measurements
        ],
        "final": {
            "basis": [ket_to_json(P.eigenket().amp) for P in F.projectors],
            "labels": list(F.labels),
            "b_label": s.b_label,
        },
        "final_name": F.name,
        "notes": s.notes,
    }


# --- report documents -------------------------------------------------------

def _dist(d: Distribution | None):
    return None if d is None else [{"label": lab, "p": p} for lab, p in d]


def _undist(v) -> Distribution | None:
    return None if v is None else Distribution(tuple(e["label"] for e in v), np.array([e["p"] for e in v]))


def report_to_document(
    report: CounterfactualReport,
    scenario: Scenario | None = None,
    tol: Tolerances = DEFAULT,
    version: str = "",
    created_utc: str | None = None,
) -> dict:
    from tsqc import __version__

    if created_utc is None:
        created_utc = _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()
    cands = []
    for c in report.candidates:
        if c.kastner is None:
            kastner = {"error": c.kastner_error}
        else:
            kastner = {
                "weights": [{"label": lab, "w": w} for lab, w in c.kastner],
                "sum": c.kastner.total(),
                "normalized": c.kastner.normalized,
            }
        cands.append({
            "measurement": c.measurement,
            "labels": list(c.labels),
            "added_measurements": c.added_measurements,
            "status": "impossible_postselection" if c.impossible else "ok",
            "abl": _dist(c.abl),
            "kastner": kastner,
            "born_predictive": _dist(c.born_predictive),
            "born_retrodictive": _dist(c.born_retrodictive),
            "oracle": None if c.oracle is None else c.oracle.to_dict(),
            "verdict": None if c.verdict is None else c.verdict.to_dict(),
            "passed": c.passed,
        })
    doc = {
        "tool": "tsqc",
        "tool_version": version or __version__,
        "report_format_version": REPORT_FORMAT_VERSION,
        "created_utc": created_utc,
        "scenario": report.scenario,
        "dim": report.dim,
        "actual_record": {"labels": list(report.actual_record), "t_a": report.t_a, "t_b": report.t_b},
        "preamble": report.preamble,
        "seed": report.seed,
        "generator": report.generator,
        "block_size": BLOCK_SIZE,
        "trials": report.trials,
        "k_sigma": report.k_sigma,
        "tolerances": {
            "structural": tol.structural,
            "aggregate": tol.aggregate,
            "impossible": tol.impossible,
            "exact": tol.exact,
        },
        "candidates": cands,
        "passed": report.passed,
    }
    if scenario is not None:
        doc["scenario_definition"] = scenario_to_dict(scenario)
    return doc


def report_from_document(doc: dict) -> CounterfactualReport:
    cands = []
    for c in doc["candidates"]:
        k = c["kastner"]
        if "weights" in k:
            w = np.array([e["w"] for e in k["weights"]])
            w.flags.writeable = False
            kw, kerr = OutcomeWeights(tuple(e["label"] for e in k["weights"]), w, bool(k["normalized"])), ""
        else:
            kw, kerr = None, k["error"]
        v = c["verdict"]
        verdict = None
        if v is not None:
            verdict = Verdict(
                bool(v["passed"]), float(v["k_sigma"]), int(v["trials_kept"]),
                tuple(OutcomeComparison(**o) for o in v["outcomes"]), v["reason"],
            )
        cands.append(CandidateResult(
            c["measurement"], tuple(c["labels"]), int(c["added_measurements"]), _undist(c["abl"]),
            c["status"] == "impossible_postselection", kw, kerr,
            _undist(c["born_predictive"]), _undist(c["born_retrodictive"]),
            None if c["oracle"] is None else EnsembleReport.from_dict(c["oracle"]), verdict,
        ))
    rec = doc["actual_record"]
    return CounterfactualReport(
        doc["scenario"], int(doc["dim"]), float(rec["t_a"]), float(rec["t_b"]), tuple(rec["labels"]),
        int(doc["trials"]), int(doc["seed"]), float(doc["k_sigma"]), doc["generator"], tuple(cands),
    )
