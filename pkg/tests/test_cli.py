import io
import json
import sys

import pandas as pd
import pytest

import main
from src.cli.commands import (EXIT_HOMOGENEITY, EXIT_INPUT, EXIT_OK, EXIT_UNCONVERGED, exit_code_for)
from src.cli.documents import CurveSpecDocument, RunManifest, load_curve, read_document
from src.lib.catalog import TWO_PI, get_curve
from src.lib.errors import HomogeneityError, NonConvergence, SchemaError, UnknownCurve


def run(monkeypatch, *args):
    monkeypatch.setattr(sys, "argv", ["main.py", *args])
    return main.main()


def write_spec(tmp_path, raw, name="spec.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return str(path)


def test_help(monkeypatch):
    assert run(monkeypatch) == EXIT_OK
    assert run(monkeypatch, "--help") == EXIT_OK


def test_bad_command_line(monkeypatch):
    assert run(monkeypatch, "length") == EXIT_INPUT
    assert run(monkeypatch, "spin", "circle") == EXIT_INPUT


def test_length_of_the_circle(monkeypatch, capsys):
    assert run(monkeypatch, "length", "circle", "--tol", "1e-3", "--max-depth", "10") == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "mesh,value,error,converged"
    assert len(lines) == 1 + 7
    assert float(lines[-1].split(",")[1]) == pytest.approx(TWO_PI, abs=1e-3)


def test_length_of_the_segment(monkeypatch, tmp_path):
    out = tmp_path / "length.csv"
    assert run(monkeypatch, "length", "segment", "--max-depth", "6", "--out", str(out)) == EXIT_OK
    frame = pd.read_csv(out)
    assert frame["value"].iloc[-1] == pytest.approx(5.0)
    assert bool(frame["converged"].iloc[-1])


def test_segment_length_at_depth_one(monkeypatch, capsys):
    assert run(monkeypatch, "length", "segment", "--max-depth", "1") == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 1 + 2
    assert float(lines[-1].split(",")[1]) == pytest.approx(5.0)


def test_schedule_cap_keeps_two_levels(monkeypatch, capsys):
    monkeypatch.setenv("RECTIFY_SCHEDULE_MAX", "4")
    assert run(monkeypatch, "length", "segment") == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 1 + 2
    assert lines[-1].endswith("True")


def test_unconverged_length_exits_2(monkeypatch):
    assert run(monkeypatch, "length", "circle", "--max-depth", "4") == EXIT_UNCONVERGED


def test_frechet_of_offset_circles(monkeypatch, capsys, tmp_path):
    spec = write_spec(tmp_path, {"name": "circle", "params": {"radius": 1.1}})
    assert run(monkeypatch, "frechet", "circle", spec, "--depth", "6") == EXIT_OK
    frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
    assert list(frame.columns) == ["i", "j", "distance"]
    assert frame["distance"].max() == pytest.approx(0.1)
    assert frame[["i", "j"]].iloc[-1].tolist() == [64, 64]


def test_frechet_dimension_mismatch(monkeypatch):
    assert run(monkeypatch, "frechet", "circle", "helix") == EXIT_INPUT


def test_lineint(monkeypatch, capsys):
    assert run(monkeypatch, "lineint", "circle", "--integrand", "area2d", "--tol", "1e-4", "--max-depth", "12") \
        == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert float(lines[-1].split(",")[1]) == pytest.approx(TWO_PI, abs=1e-5)


def test_lineint_exit_codes(monkeypatch):
    assert run(monkeypatch, "lineint", "circle", "--integrand", "normsq") == EXIT_HOMOGENEITY
    assert run(monkeypatch, "lineint", "circle", "--integrand", "speed") == EXIT_INPUT
    assert run(monkeypatch, "lineint", "circle", "--xi", "centre", "--max-depth", "6") == EXIT_INPUT


def test_bc_example(monkeypatch, tmp_path):
    out = tmp_path / "qa.csv"
    assert run(monkeypatch, "bc", "--example", "1", "--out", str(out)) == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["mesh_D0", "mesh_D", "qa1", "qa2", "qsa"]
    assert len(frame) == 8
    assert (frame["mesh_D"] < frame["mesh_D0"]).all()


def test_bc_example_uri(monkeypatch):
    assert run(monkeypatch, "bc", "--example", "bc://example/9?f=x^3", "--seed", "3") == EXIT_OK


def test_bc_unknown_example(monkeypatch):
    assert run(monkeypatch, "bc", "--example", "42") == EXIT_INPUT
    assert run(monkeypatch, "bc", "--example", "twelve") == EXIT_INPUT


def test_verify_suite(monkeypatch, capsys):
    assert run(monkeypatch, "verify", "--suite", "frechet", "--seed", "1") == EXIT_OK
    results = json.loads(capsys.readouterr().out)
    assert [r["check"] for r in results] == ["premetric", "offset_circle", "midpoint_stability", "endpoint_bound",
                                            "length_invariance"]
    assert all(r["passed"] and r["seed"] == 1 for r in results)


def test_verify_unknown_suite(monkeypatch):
    assert run(monkeypatch, "verify", "--suite", "topology") == EXIT_INPUT


def test_manifest(monkeypatch, tmp_path):
    out, manifest = tmp_path / "length.csv", tmp_path / "run.json"
    assert run(monkeypatch, "length", "circle", "--tol", "1e-2", "--max-depth", "6", "--out", str(out),
               "--manifest", str(manifest)) == EXIT_OK
    record = RunManifest.read(str(manifest))
    assert record.command == "length"
    assert record.inputs == ["circle"]
    assert record.schedule == {"min_depth": 4, "max_depth": 6}
    assert record.tolerances == {"tol": 1e-2}
    assert record.outputs == [str(out)]


@pytest.mark.parametrize("record", [
    {"command": "length", "inputs": ["circle"], "wobble": 1},
    {"command": "draw", "inputs": ["circle"]},
    {"command": "length", "inputs": "circle"},
    {"command": "length", "inputs": ["circle"], "seed": 1.5},
    {"inputs": ["circle"]},
])
def test_manifest_schema_rejects(tmp_path, record):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(record))
    with pytest.raises(SchemaError):
        RunManifest.read(str(path))


def test_manifest_write_is_validated(tmp_path):
    with pytest.raises(SchemaError):
        RunManifest("draw", ["circle"]).write(str(tmp_path / "run.json"))
    assert not (tmp_path / "run.json").exists()


def test_runs_are_byte_identical(monkeypatch, tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (first, second):
        assert run(monkeypatch, "lineint", "circle", "--xi", "random", "--seed", "7", "--tol", "1e-2",
                   "--max-depth", "8", "--out", str(out)) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_spec_from_stdin(monkeypatch, capsys):
    raw = {"kind": "sampled", "domain": [0, 1], "dim": 2, "nodes": [0, 0.5, 1], "values": [[0, 0], [3, 4], [3, 0]]}
    monkeypatch.setattr(sys, "stdin", io.StringIO(json.dumps(raw)))
    assert run(monkeypatch, "length", "-", "--max-depth", "5") == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert float(lines[-1].split(",")[1]) == pytest.approx(9.0)


@pytest.mark.parametrize("raw", [
    {"kind": "analytic", "name": "circle", "wobble": 1},
    {"kind": "spline", "name": "circle"},
    {"kind": "sampled", "nodes": [0, 1, 0.5], "values": [0, 1, 2]},
    {"kind": "sampled", "dim": 3, "nodes": [0, 1], "values": [[0, 0], [1, 1]]},
    {"name": "helix", "domain": [0, 1]},
    {"name": "circle", "params": {"wobble": 2}},
    [1, 2, 3],
])
def test_schema_errors_exit_1(monkeypatch, tmp_path, raw):
    assert run(monkeypatch, "length", write_spec(tmp_path, raw)) == EXIT_INPUT


def test_missing_spec(monkeypatch, tmp_path):
    assert run(monkeypatch, "length", str(tmp_path / "nothing.json")) == EXIT_INPUT
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(SchemaError):
        read_document(str(bad))


def test_documents_round_trip():
    doc = CurveSpecDocument.from_curve(get_curve("circle", radius=2.0))
    assert doc.to_dict()["name"] == "circle"
    curve = CurveSpecDocument.from_dict(doc.to_dict()).to_curve()
    assert curve.evaluate(0.0) == pytest.approx([2.0, 0.0])

    polygon = CurveSpecDocument.from_dict({"kind": "sampled", "nodes": [0, 1], "values": [[0, 0], [1, 1]]})
    again = CurveSpecDocument.from_curve(polygon.to_curve())
    assert again.kind == "sampled" and again.dim == 2


def test_catalog_names_and_domains(tmp_path):
    assert load_curve("Circle").dim == 2
    spec = write_spec(tmp_path, {"name": "circle", "domain": [0, 3.0]})
    assert load_curve(spec).domain_hi == 3.0


def test_exit_code_mapping():
    assert exit_code_for(NonConvergence("slow")) == EXIT_UNCONVERGED
    assert exit_code_for(HomogeneityError("degree 2")) == EXIT_HOMOGENEITY
    assert exit_code_for(UnknownCurve("spiral")) == EXIT_INPUT
