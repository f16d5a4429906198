import json

import pytest

from core import Assignment, game_from_types, load_assignment, load_game, save_assignment, save_game
from instances import gen_cycle, gen_line
from main import EXIT_CODES, main


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    monkeypatch.delenv("JUMPGAMES_CONFIG", raising=False)
    monkeypatch.delenv("JUMPGAMES_LOG_LEVEL", raising=False)


def write_spec(tmp_path, family, **parameters):
    path = tmp_path / f"{family}.spec.json"
    path.write_text(json.dumps({"family": family, "parameters": parameters}))
    return str(path)


def run(*args):
    return main(["main.py", *args])


@pytest.fixture
def path_files(tmp_path):
    game = game_from_types(gen_line(3), 2, [1, 2])
    save_game(game, tmp_path / "path.json")
    save_assignment(Assignment.of({0: 0, 1: 2}), tmp_path / "apart.json")
    save_assignment(Assignment.of({0: 1, 1: 2}), tmp_path / "together.json")
    return tmp_path


def test_gen_writes_the_game_and_quoted_assignment(tmp_path):
    out = tmp_path / "line.json"
    assert run("gen", "--spec", write_spec(tmp_path, "poa_line", n=8), "--out", str(out)) == 0
    game = load_game(out)
    assert game.n == 8
    assignment = load_assignment(tmp_path / "line.assignment.json", game)
    assert assignment.occupant(4) is None


def test_ird_reports_a_cycle(tmp_path, capsys):
    assert run("ird", "--spec", write_spec(tmp_path, "tree_irc_witness")) == EXIT_CODES["cycle"]
    records = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
    assert records[-1]["status"] == "CycleDetected"
    assert len(records) == 4


def test_ird_step_limit(tmp_path):
    spec = write_spec(tmp_path, "tree_irc_witness")
    assert run("ird", "--spec", spec, "--max-steps", "2") == EXIT_CODES["step_limit"]


def test_ird_converges_and_writes_a_trace(path_files, capsys):
    trace = path_files / "trace.jsonl"
    code = run("ird", "--instance", str(path_files / "path.json"), "--start", str(path_files / "apart.json"),
               "--m", "3/4", "--out", str(trace))
    assert code == 0
    assert "Converged after 1 moves" in capsys.readouterr().out
    first = json.loads(trace.read_text().splitlines()[0])
    assert (first["phi_before"], first["phi_after"]) == ("3/2", "3/4")


def test_ird_rejects_a_bad_potential_parameter(path_files):
    with pytest.raises(SystemExit) as info:
        run("ird", "--instance", str(path_files / "path.json"), "--random-start", "--m", "2")
    assert info.value.code == 2


def test_check_eq(path_files, capsys):
    game = str(path_files / "path.json")
    assert run("check-eq", "--instance", game, "--start", str(path_files / "together.json")) == 0
    assert run("check-eq", "--instance", game, "--start", str(path_files / "apart.json")) == \
        EXIT_CODES["not_equilibrium"]
    assert "agent 0 improves by jumping to node 1" in capsys.readouterr().out


def test_brute(tmp_path):
    out = tmp_path / "report.json"
    assert run("brute", "--spec", write_spec(tmp_path, "pos_fixture"), "--out", str(out)) == 0
    report = json.loads(out.read_text())
    assert report["pos"] == "65/62"
    assert report["total_states_examined"] == 105


def test_brute_budget(tmp_path, capsys):
    code = run("brute", "--spec", write_spec(tmp_path, "pos_fixture"), "--budget", "10")
    assert code == EXIT_CODES["budget"]
    assert "105" in capsys.readouterr().err


def test_find_irc(tmp_path, path_files):
    out = tmp_path / "cycle.json"
    assert run("find-irc", "--spec", write_spec(tmp_path, "regular_irc_witness"), "--out", str(out)) == 0
    assert json.loads(out.read_text())["cycle"]
    assert run("find-irc", "--instance", str(path_files / "path.json")) == EXIT_CODES["no_cycle"]


def test_solve_tree(tmp_path, capsys):
    game = game_from_types(gen_line(6), 3, [1, 2, 3, 1])
    save_game(game, tmp_path / "line.json")
    out = tmp_path / "eq.json"
    assert run("solve-tree", "--instance", str(tmp_path / "line.json"), "--out", str(out)) == 0
    assert "verified: equilibrium" in capsys.readouterr().out
    assert load_assignment(out, game).node_of(0) is not None

    save_game(game_from_types(gen_cycle(5), 2, [1, 2]), tmp_path / "cycle.json")
    assert run("solve-tree", "--instance", str(tmp_path / "cycle.json")) == EXIT_CODES["tree_preconditions"]


def test_instance_and_spec_are_exclusive(tmp_path, path_files):
    spec = write_spec(tmp_path, "pos_fixture")
    assert run("brute", "--spec", spec, "--instance", str(path_files / "path.json")) == EXIT_CODES["invalid_input"]
    assert run("brute") == EXIT_CODES["invalid_input"]


def test_bad_config(tmp_path, path_files):
    config = tmp_path / "bad.yaml"
    config.write_text("dynamics:\n  m: \"2\"\n")
    code = run("--config", str(config), "find-irc", "--instance", str(path_files / "path.json"))
    assert code == EXIT_CODES["invalid_input"]


def test_poa_suite_passes(tmp_path, capsys):
    out = tmp_path / "suite.csv"
    assert run("poa-suite", "--out", str(out)) == 0
    assert "pos fixture" in capsys.readouterr().out
    lines = out.read_text().splitlines()
    assert lines[0] == "row,metric,expected,observed,states,pass,error"
    assert len(lines) == 6


def test_poa_suite_flags_a_tampered_fixture(path_files, capsys):
    code = run("poa-suite", "--fixture", str(path_files / "path.json"), "--rows", "pos fixture")
    assert code == EXIT_CODES["suite_failed"]
    assert "FAILED: pos fixture" in capsys.readouterr().err


def test_poa_suite_with_a_missing_fixture(tmp_path):
    code = run("poa-suite", "--fixture", str(tmp_path / "absent.json"), "--rows", "pos fixture")
    assert code == EXIT_CODES["suite_failed"]


def test_poa_suite_needs_rows():
    with pytest.raises(SystemExit) as info:
        run("poa-suite", "--rows", "no such row")
    assert info.value.code == 2


@pytest.mark.parametrize("document", [
    {"nodes": 3, "edges": [[0, 1, 2]], "k": 2, "agents": [{"id": 0, "type": 1}, {"id": 1, "type": 2}]},
    {"nodes": 3, "edges": [[0, 1]], "k": 2, "agents": [{"id": "a", "type": 1}, {"id": 1, "type": 2}]},
    {"nodes": "three", "edges": [[0, 1]], "k": 2, "agents": [{"id": 0, "type": 1}, {"id": 1, "type": 2}]},
])
def test_malformed_game_files_are_invalid_input(tmp_path, capsys, document):
    path = tmp_path / "game.json"
    path.write_text(json.dumps(document))
    assert run("brute", "--instance", str(path)) == EXIT_CODES["invalid_input"]
    assert "malformed game document" in capsys.readouterr().err


def test_malformed_spec_parameters_are_invalid_input(tmp_path):
    spec = tmp_path / "line.spec.json"
    spec.write_text(json.dumps({"family": "line", "parameters": {"nodes": "9"}, "type_profile": [[1, 2, 0]]}))
    assert run("gen", "--spec", str(spec), "--out", str(tmp_path / "out.json")) == EXIT_CODES["invalid_input"]


def test_random_runs_repeat_without_a_seed(tmp_path):
    game = game_from_types(gen_line(9), 2, [1, 1, 1, 2, 2, 2])
    save_game(game, tmp_path / "line.json")
    traces = []
    for name in ("first.jsonl", "second.jsonl"):
        out = tmp_path / name
        run("ird", "--instance", str(tmp_path / "line.json"), "--random-start", "--policy", "random", "--out", str(out))
        traces.append(out.read_text())
    assert traces[0] == traces[1]
    assert traces[0]
