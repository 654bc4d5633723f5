from __future__ import annotations

import json
import subprocess
import sys
from fractions import Fraction
from importlib import resources

import pytest

from cegames.cli import main
from cegames.game_model import parse_game
from cegames.solve import tree_rollback


@pytest.fixture()
def rad_path(tmp_path):
    path = tmp_path / "radicalisation.json"
    path.write_text(resources.files("cegames").joinpath("data/radicalisation.json").read_text(encoding="utf-8"))
    return path


@pytest.fixture()
def oil_path(tmp_path):
    path = tmp_path / "oil.json"
    path.write_text(resources.files("cegames").joinpath("data/oil.json").read_text(encoding="utf-8"))
    return path


def run(*argv):
    return main([str(a) for a in argv])


def test_validate_ok(rad_path, capsys):
    assert run("validate", "--input", rad_path) == 0
    assert capsys.readouterr().out == "ok\n"


def test_validate_reports_diagnostics(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "players": ["A"], "perspective": "A", "root": "r",
        "nodes": {
            "r": {"kind": "chance", "edges": [{"label": "x", "to": "a", "p": "1/2"},
                                               {"label": "x", "to": "b", "p": "1/3"}]},
            "a": {"kind": "utility", "u": {"A": "0"}},
            "b": {"kind": "utility", "u": {"A": "0"}},
        },
    }))
    assert run("validate", "--input", bad) == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 2
    assert any("5/6" in line for line in err)


def test_malformed_json_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    assert run("validate", "--input", bad) == 1
    assert "error" in capsys.readouterr().err


def test_missing_file_exits_two(tmp_path, capsys):
    assert run("solve", "--input", tmp_path / "absent.json") == 2
    assert capsys.readouterr().err


def test_missing_input_flag_exits_two(capsys):
    assert run("build") == 2


def test_generate_requires_seed(capsys):
    assert run("generate") == 2


def test_solve_matches_rollback(rad_path, tmp_path):
    out, dot = tmp_path / "sol.json", tmp_path / "out.dot"
    assert run("solve", "--input", rad_path, "--output", out, "--dot", dot) == 0
    doc = json.loads(out.read_text())
    ref = tree_rollback(parse_game(rad_path.read_text()))
    assert Fraction(doc["root_vector"]["A"]) == ref.root_vector[0]
    assert Fraction(doc["root_vector"]["B"]) == ref.root_vector[1]
    dashed = dot.read_text().count("style=dashed")
    marked = sum(len(d["suboptimal_edges"]) for d in doc["decisions"].values())
    assert dashed == marked > 0


def test_simplify_trace_cascade(rad_path, tmp_path):
    out = tmp_path / "simple.json"
    assert run("simplify", "--input", rad_path, "--output", out, "--emit-trace") == 0
    doc = json.loads(out.read_text())
    assert len(doc["ceg"]["positions"]) == 17
    barren = [r.get("var") for r in doc["trace"] if r["kind"] == "barren_deleted"]
    assert barren.index("X4") < barren.index("D2(B)") < barren.index("D2(A)")


def test_simplify_without_trace(rad_path, capsys):
    assert run("simplify", "--input", rad_path) == 0
    assert "trace" not in json.loads(capsys.readouterr().out)


def test_simplify_pushes_edge_utilities(oil_path, capsys):
    assert run("simplify", "--input", oil_path) == 0
    assert json.loads(capsys.readouterr().out)["ceg"]["positions"]


def test_ci_command(rad_path, capsys):
    assert run("ci", "--input", rad_path) == 0
    doc = json.loads(capsys.readouterr().out)
    texts = {s["text"] for s in doc["statements"]}
    assert "X3 ⟂ (X1, X2) | (D1(A), D1(B))" in texts
    assert doc["note"]


def test_ci_guard_exit_two(rad_path, capsys):
    assert run("ci", "--input", rad_path, "--max-subset", "3") == 2


def test_ci_without_variables_exits_one(oil_path, tmp_path, capsys):
    doc = json.loads(oil_path.read_text())
    doc.pop("variables")
    plain = tmp_path / "plain.json"
    plain.write_text(json.dumps(doc))
    assert run("ci", "--input", plain) == 1


def test_build_and_export(rad_path, tmp_path, capsys):
    assert run("build", "--input", rad_path) == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["positions"]) == 36
    dot = tmp_path / "g.dot"
    assert run("export", "--input", rad_path, "--output", dot) == 0
    assert dot.read_text().startswith("digraph ceg {")


def test_generate_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run("generate", "--seed", 0, "--output", a) == 0
    assert run("generate", "--seed", 0, "--output", b) == 0
    assert a.read_bytes() == b.read_bytes()
    assert run("validate", "--input", a) == 0


def test_generate_with_ties(capsys):
    assert run("generate", "--seed", 4, "--with-ties") == 0
    t = parse_game(capsys.readouterr().out)
    assert any(len(s) > 1 for s in tree_rollback(t).optimal_edges.values())


@pytest.mark.parametrize("command", ["build", "simplify", "solve", "ci", "export"])
def test_byte_identical_outputs(rad_path, tmp_path, command):
    extra = ["--emit-trace"] if command == "simplify" else []
    outs = []
    for k in range(2):
        out = tmp_path / f"{command}{k}.out"
        assert run(command, "--input", rad_path, "--output", out, *extra) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_overwrite_leaves_no_temp_files(rad_path, tmp_path):
    out = tmp_path / "sol.json"
    out.write_text("stale")
    assert run("solve", "--input", rad_path, "--output", out) == 0
    assert json.loads(out.read_text())["root_vector"]
    assert sorted(p.name for p in tmp_path.iterdir()) == ["radicalisation.json", "sol.json"]


def test_module_entry_point(rad_path):
    proc = subprocess.run([sys.executable, "-m", "cegames", "validate", "--input", str(rad_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "ok\n"
