import json

import pytest

from conftest import MODELS
from dtnmc.cli import main

FIG1 = str(MODELS / "fig1.gta")
FIG3 = str(MODELS / "fig3.gta")

LONELY = """gta L
clocks c
location p initial
location q
location r
trans p -> q label: a locguard: r
"""


@pytest.fixture
def lonely(tmp_path):
    path = tmp_path / "lonely.gta"
    path.write_text(LONELY)
    return str(path)


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_check_local_reachable(capsys):
    rc, out, _ = run(capsys, "check-local", FIG1, "--label", "serr")
    assert rc == 0
    payload = json.loads(out)
    assert payload["result"] == "reachable"
    assert payload["witness"][-1]["label"] == "serr"


def test_check_local_unknown_label(capsys):
    rc, _, err = run(capsys, "check-local", FIG1, "--label", "nosuch")
    assert rc == 2
    assert "error: unknown label 'nosuch'" in err


def test_validate_text(capsys):
    rc, out, _ = run(capsys, "validate", FIG3)
    assert rc == 0
    assert "timelock-free: refuted" in out
    assert "Assumption 1 refuted at (q1, c=1)" in out
    rc, out, _ = run(capsys, "validate", FIG1)
    assert rc == 0 and "timelock-free: proved" in out


def test_fail_on_unreachable(capsys, lonely):
    rc, out, _ = run(capsys, "check-local", lonely, "--label", "a")
    assert rc == 0 and json.loads(out)["result"] == "unreachable"
    rc, _, _ = run(capsys, "check-local", lonely, "--label", "a",
                   "--fail-on-unreachable")
    assert rc == 1


def test_budget_exit_code(capsys):
    rc, _, err = run(capsys, "check-local", FIG1, "--label", "serr",
                     "--max-states", "10")
    assert rc == 3
    assert err.startswith("budget exceeded:")


def test_env_budget(capsys, monkeypatch):
    monkeypatch.setenv("DTNMC_MAX_STATES", "10")
    rc, _, err = run(capsys, "check-local", FIG1, "--label", "serr")
    assert rc == 3 and "budget exceeded" in err
    # an explicit flag wins over the environment
    monkeypatch.setenv("DTNMC_MAX_STATES", "10")
    rc, _, _ = run(capsys, "check-local", FIG1, "--label", "serr",
                   "--max-states", "100000")
    assert rc == 0
    monkeypatch.setenv("DTNMC_MAX_STATES", "lots")
    rc, _, err = run(capsys, "check-local", FIG1, "--label", "serr")
    assert rc == 2 and "not an integer" in err


def test_json_is_byte_deterministic(capsys, tmp_path):
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    rc1, out1, _ = run(capsys, "check-local", FIG1, "--label", "serr",
                       "--json", str(p1))
    rc2, out2, _ = run(capsys, "check-local", FIG1, "--label", "serr",
                       "--json", str(p2))
    assert rc1 == rc2 == 0
    assert out1 == out2
    assert p1.read_bytes() == p2.read_bytes()
    assert json.loads(p1.read_text()) == json.loads(out1)


def test_build_dra_and_dot(capsys, tmp_path):
    dot = tmp_path / "dra.dot"
    rc, out, _ = run(capsys, "build-dra", FIG3, "--dot", str(dot))
    assert rc == 0
    payload = json.loads(out)
    assert payload["layers"] == 6 and payload["states"] == 43
    assert payload["slots"][0] == "[0,0]"
    assert dot.read_text().startswith("digraph")


def test_streaming_skips_dot(capsys, tmp_path):
    dot = tmp_path / "x.dot"
    rc, out, err = run(capsys, "check-local", FIG1, "--label", "serr",
                       "--streaming", "--dot", str(dot))
    assert rc == 0
    assert json.loads(out)["mode"] == "streaming"
    assert "skipped in streaming mode" in err
    assert not dot.exists()


def test_check_global(capsys):
    rc, out, _ = run(capsys, "check-global", FIG3, "--constraint",
                     "#q1>=1 && #init==0")
    assert rc == 0
    assert json.loads(out)["result"] == "reachable"
    rc, _, err = run(capsys, "check-global", FIG3, "--constraint", "#zz>=1")
    assert rc == 2 and "unknown location" in err


def test_translate_both_ways(capsys, tmp_path):
    rc, out, _ = run(capsys, "translate", FIG1, "--to", "lbta")
    assert rc == 0 and out.startswith("lbta fig1")
    lb = tmp_path / "fig1.lbta"
    lb.write_text(out)
    rc, out2, _ = run(capsys, "translate", str(lb), "--to", "gta")
    assert rc == 0 and out2.startswith("gta fig1")
    assert "locguard: snd_" in out2


def test_summary_and_product(capsys):
    rc, out, _ = run(capsys, "summary", FIG3)
    assert rc == 0 and out.startswith("ta fig3_summary")
    rc, out, _ = run(capsys, "product", FIG3, "-k", "2")
    assert rc == 0 and out.startswith("ta fig3_summary_x2")
    rc, _, err = run(capsys, "product", FIG3, "-k", "0")
    assert rc == 2 and "k must be >= 1" in err


def test_oracle_subcommand(capsys):
    rc, out, _ = run(capsys, "oracle", FIG1, "-n", "3", "--label", "serr",
                     "--slot-cap", "2")
    assert rc == 0
    payload = json.loads(out)
    assert payload["result"] == "reachable"
    assert payload["trace"][-1]["label"] == "serr"
    rc, _, err = run(capsys, "oracle", FIG1, "-n", "1", "--label", "serr",
                     "--slot-cap", "2", "--fail-on-unreachable")
    assert rc == 1
    rc, _, err = run(capsys, "oracle", FIG1, "-n", "1", "--label", "x",
                     "--constraint", "#init>=1")
    assert rc == 2 and "mutually exclusive" in err


def test_usage_errors(capsys):
    assert main(["check-local", FIG1]) == 2  # --label is required
    assert main(["no-such-command"]) == 2
    assert main(["--version"]) == 0
    out = capsys.readouterr()
    assert "dtnmc" in out.out


def test_missing_file(capsys):
    rc, _, err = run(capsys, "validate", "/no/such/file.gta")
    assert rc == 2 and err.startswith("error:")
