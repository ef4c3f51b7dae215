import json
import math

import numpy as np
import pytest
from pathlib import Path

from tsqc.ensemble import EnsembleConfig
from tsqc.errors import ParseError, ValidationError
from tsqc.fileformat import (
    dumps,
    load_scenario,
    report_from_document,
    report_to_document,
    scenario_from_dict,
    scenario_to_dict,
)
from tsqc.scenarios import counterfactual_report, random_scenario, three_holes

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def three_holes_dict():
    return json.loads((SCENARIO_DIR / "three_holes.json").read_text())


def test_shipped_file_matches_builtin():
    from_file = load_scenario(SCENARIO_DIR / "three_holes.json")
    builtin = three_holes()
    np.testing.assert_allclose(from_file.two_state.pre.amp, builtin.two_state.pre.amp)
    for Mf, Mb in zip(from_file.candidate_measurements, builtin.candidate_measurements):
        assert Mf.labels == Mb.labels
        for Pf, Pb in zip(Mf.projectors, Mb.projectors):
            np.testing.assert_allclose(Pf.matrix, Pb.matrix)


def test_dumps_uses_17_significant_digits():
    text = dumps({"x": 0.1, "y": 1.0, "n": 3, "z": [1 / 3, -2.5e-30]})
    assert '"x": 0.10000000000000001' in text
    assert '"y": 1.0' in text
    assert '"n": 3' in text
    data = json.loads(text)
    assert data["z"][0] == 1 / 3 and data["z"][1] == -2.5e-30
    with pytest.raises(ValueError):
        dumps({"bad": math.nan})


def test_scenario_round_trip():
    for s in (three_holes(), random_scenario(5, 3)):
        again = scenario_from_dict(json.loads(dumps(scenario_to_dict(s))))
        # kets are renormalized on load, which may move the last bit
        np.testing.assert_allclose(again.two_state.pre.amp, s.two_state.pre.amp, rtol=0, atol=1e-15)
        np.testing.assert_allclose(again.two_state.post.amp, s.two_state.post.amp, rtol=0, atol=1e-15)
        assert again.b_label == s.b_label
        for Ma, Mb in zip(again.candidate_measurements, s.candidate_measurements):
            assert Ma.labels == Mb.labels and Ma.name == Mb.name
            for Pa, Pb in zip(Ma.projectors, Mb.projectors):
                np.testing.assert_array_equal(Pa.matrix, Pb.matrix)


def test_report_document_round_trip():
    s = three_holes()
    rep = counterfactual_report(s, EnsembleConfig(20_000, 5))
    doc = report_to_document(rep, s, created_utc="2000-01-01T00:00:00+00:00")
    text = dumps(doc)
    back = report_from_document(json.loads(text))
    assert dumps(report_to_document(back, s, created_utc="2000-01-01T00:00:00+00:00")) == text


def test_report_document_metadata():
    s = three_holes()
    doc = report_to_document(counterfactual_report(s, EnsembleConfig(1000, 9)), s)
    for key in ("seed", "generator", "trials", "tolerances", "tool_version", "block_size", "k_sigma", "created_utc"):
        assert key in doc
    assert all(c["added_measurements"] == 1 for c in doc["candidates"])


@pytest.mark.parametrize(
    "mutate, where",
    [
        (lambda d: d.pop("pre"), "$"),
        (lambda d: d.update(dim=1), "dim"),
        (lambda d: d.update(format_version=9), "format_version"),
        (lambda d: d["post"].pop(), "post"),
        (lambda d: d["pre"].__setitem__(1, ["x", 0]), "pre[1][0]"),
        (lambda d: d["measurements"][0]["partition"][1].append("hole9"), "measurements[0].partition[1][2]"),
        (lambda d: d["measurements"][1].pop("partition"), "measurements[1]"),
        (lambda d: d["final"].update(b_label="nowhere"), "final.b_label"),
        (lambda d: d["final"].update(labels=["B", "B"]), "final.labels"),
    ],
)
def test_parse_errors_are_field_anchored(mutate, where):
    d = three_holes_dict()
    mutate(d)
    with pytest.raises(ParseError) as info:
        scenario_from_dict(d)
    assert info.value.where == where


def test_json_syntax_error_has_line(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text('{\n  "format_version": 1,\n  "dim": 3,,\n}\n')
    with pytest.raises(ParseError) as info:
        load_scenario(p)
    assert info.value.where.startswith("line 3")


def test_invalid_projector_matrices_raise_validation_error():
    d = three_holes_dict()
    d["measurements"] = [{"name": "bad", "projectors": [
        {"label": "a", "matrix": [[[1, 0], [0, 0], [0, 0]], [[0, 0], [0, 0], [0, 0]], [[0, 0], [0, 0], [0, 0]]]},
        {"label": "b", "matrix": [[[0, 0], [0, 0], [0, 0]], [[0, 0], [1, 0], [0, 0]], [[0, 0], [0, 0], [0, 0]]]},
    ]}]
    with pytest.raises(ValidationError) as info:
        scenario_from_dict(d)
    assert info.value.invariant == "completeness"


def test_partition_with_explicit_labels():
    d = three_holes_dict()
    d["measurements"][0]["labels"] = ["first", "others"]
    s = scenario_from_dict(d)
    assert s.candidate_measurements[0].labels == ("first", "others")
