import csv
import json
import re

import numpy as np
import pytest

from seamless_penner import fixtures
from seamless_penner.cli import (
    EXIT_INVALID,
    EXIT_IO,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_SOLVER,
    content_digest,
    dumps_report,
    load_mesh,
    main,
)


def sig_file(tmp_path, doc, name="sig.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


OCTA_SIG = {"vertex_default": 1, "vertices": {"5": 3}}


def solve(tmp_path, *args, out="out"):
    d = tmp_path / out
    code = main(["solve", *args, "--out", str(d)])
    doc = json.loads((d / "result.json").read_text()) if (d / "result.json").exists() else None
    return code, doc, d


def test_tetrahedron_trivial(tmp_path):
    code, doc, d = solve(tmp_path, "--mesh", "fixture:tetrahedron")
    assert code == EXIT_OK
    assert doc["status"] == "Converged" and doc["iterations"] == 0
    for f in ("lambda.csv", "deviations.csv", "layout.obj"):
        assert (d / f).exists()


def test_octahedron_needs_acknowledgement(tmp_path, capsys):
    s = sig_file(tmp_path, OCTA_SIG)
    code, doc, _ = solve(tmp_path, "--mesh", "fixture:octahedron", "--signature", s)
    assert code == EXIT_INVALID and doc is None
    assert "GaussBonnetViolated" in capsys.readouterr().err

    code, doc, _ = solve(tmp_path, "--mesh", "fixture:octahedron", "--signature", s,
                         "--acknowledge-invalid", "--eps-c", "1e-12")
    assert code == EXIT_OK
    assert doc["max_residual"] <= 1e-12
    assert doc["seamlessness"]["max_deviation"] <= 1e-12
    assert doc["input"]["signature_valid"] is False


def test_two_cone_torus_rejected(tmp_path, capsys):
    mesh, _, _ = load_mesh("fixture:torus_grid")
    s = sig_file(tmp_path, {"vertices": {"0": 3, "1": 5}, "loops": {"basis": "auto", "k": [0, 0]}})
    code = main(["validate", "--mesh", "fixture:torus_grid", "--signature", s])
    assert code == EXIT_INVALID
    assert "TwoCone35" in capsys.readouterr().out
    code, doc, _ = solve(tmp_path, "--mesh", "fixture:torus_grid", "--signature", s)
    assert code == EXIT_INVALID and doc is None
    assert mesh.genus == 1


def test_validate_examples(tmp_path, capsys):
    assert main(["validate", "--mesh", "fixture:tetrahedron"]) == EXIT_OK
    assert main(["validate", "--mesh", "fixture:octahedron",
                 "--signature", sig_file(tmp_path, OCTA_SIG)]) == EXIT_INVALID
    bad = sig_file(tmp_path, {"vertices": {"0": 0}}, "bad.json")
    assert main(["validate", "--mesh", "fixture:tetrahedron", "--signature", bad]) == EXIT_INVALID
    out = capsys.readouterr().out
    assert "valid" in out and "NonPositiveCone" in out


def test_max_iterations_exit_code(tmp_path):
    code, doc, _ = solve(tmp_path, "--mesh", "fixture:octahedron", "--signature",
                         sig_file(tmp_path, OCTA_SIG), "--acknowledge-invalid", "--max-iter", "1")
    assert code == EXIT_SOLVER
    assert doc["status"] == "MaxIterations"


def test_report_floats_and_digest(tmp_path):
    c1, d1, p1 = solve(tmp_path, "--mesh", "fixture:torus_of_revolution", out="a")
    c2, d2, p2 = solve(tmp_path, "--mesh", "fixture:torus_of_revolution", out="b")
    assert c1 == c2 == EXIT_OK
    assert d1["content_sha256"] == d2["content_sha256"]
    assert content_digest(d1) == d1["content_sha256"]
    # every float literal in the report carries full precision
    text = (p1 / "result.json").read_text()
    for lit in re.findall(r"-?\d+\.\d+(?:e[-+]?\d+)?", text):
        assert float(lit) == float(format(float(lit), ".17g"))
    assert dumps_report({"x": 0.1}) == '{\n  "x": 0.10000000000000001\n}'


def test_obj_input(tmp_path):
    m, P = fixtures.torus_of_revolution()
    path = tmp_path / "t.obj"
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in P.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in m.faces.tolist()]
    path.write_text("\n".join(lines) + "\n")
    code, doc, d = solve(tmp_path, "--mesh", str(path), "--alpha-min", "20")
    assert code == EXIT_OK
    assert doc["input"]["genus"] == 1
    rows = list(csv.DictReader(open(d / "lambda.csv")))
    assert len(rows) == m.n_edges


def test_stats(tmp_path):
    _, _, a = solve(tmp_path, "--mesh", "fixture:tetrahedron", out="a")
    _, _, b = solve(tmp_path, "--mesh", "fixture:octahedron", "--signature",
                    sig_file(tmp_path, OCTA_SIG), "--acknowledge-invalid", "--max-iter", "1", out="b")
    out = tmp_path / "stats.csv"
    assert main(["stats", str(a / "result.json"), str(b / "result.json"), "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(open(out)))
    runs = [r for r in rows if r["record"] == "run"]
    assert len(runs) == 2
    assert [r["failure"] for r in runs] == ["", "MaxIterations"]
    hist = [r for r in rows if r["record"] == "iterations_histogram"]
    assert sum(int(r["count"]) for r in hist) == 2


def test_stats_errors(tmp_path):
    assert main(["stats", "--out", str(tmp_path / "s.csv")]) == EXIT_IO
    assert main(["stats", str(tmp_path / "missing.json"), "--out", str(tmp_path / "s.csv")]) == EXIT_IO


@pytest.mark.parametrize("doc", [
    "{not json",
    json.dumps({"vertices": {"0": 3.5}}),
    json.dumps({"vertices": {"99": 4}}),
    json.dumps({"loops": {"basis": "auto", "k": [0]}}),
])
def test_parse_errors(tmp_path, doc):
    p = tmp_path / "s.json"
    p.write_text(doc)
    code = main(["validate", "--mesh", "fixture:torus_grid", "--signature", str(p)])
    assert code == EXIT_PARSE


def test_usage_errors(tmp_path):
    assert main(["frobnicate"]) == EXIT_PARSE
    assert main(["solve", "--mesh", "fixture:nope"]) == EXIT_PARSE
    assert main(["solve", "--mesh", "fixture:tetrahedron", "--interp", "1.5",
                 "--out", str(tmp_path)]) == EXIT_PARSE
    assert main(["solve", "--mesh", str(tmp_path / "none.obj")]) == EXIT_IO
    assert main(["validate", "--mesh", "fixture:tetrahedron",
                 "--signature", str(tmp_path / "none.json")]) == EXIT_IO


def test_lambda_csv_matches_report(tmp_path):
    code, doc, d = solve(tmp_path, "--mesh", "fixture:tetrahedron")
    rows = list(csv.DictReader(open(d / "lambda.csv")))
    assert np.allclose([float(r["stretch"]) for r in rows], 1.0)
