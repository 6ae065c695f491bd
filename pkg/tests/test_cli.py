"""CLI harness: exit-code contract, report files, determinism."""

import json

import pytest

from gpdlab.cli import (EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, EXIT_RUNTIME,
                        main)

FAST_PAIR = """\
[scene]
kind = "pair"
grid = 100

[integration]
steps = 40
"""

FAST_GROUP = """\
[scene]
kind = "group"
group = "Heisenberg3"
grid = 100

[integration]
steps = 40
"""


@pytest.fixture
def pair_toml(tmp_path):
    p = tmp_path / "pair.toml"
    p.write_text(FAST_PAIR)
    return p


def _load_report(out_dir, suite):
    with open(out_dir / f"{suite}.json") as fh:
        return json.load(fh)


def test_exit_pass_and_report(pair_toml, tmp_path, capsys):
    out = tmp_path / "rep"
    code = main(["verify", "--config", str(pair_toml),
                 "--suite", "groupoid-axioms", "--out", str(out)])
    assert code == EXIT_PASS
    report = _load_report(out, "groupoid-axioms")
    assert report["pass"] is True
    assert report["meta"]["kind"] == "pair"
    assert all(c["residual"] <= c["tol"] for c in report["checks"])
    stdout = capsys.readouterr().out
    assert stdout.startswith("PASS groupoid-axioms:")


def test_exit_fail_on_impossible_tolerance(tmp_path, capsys):
    p = tmp_path / "strict.toml"
    p.write_text(FAST_PAIR + '\n[tolerances]\ncocycle = 1e-300\n')
    out = tmp_path / "rep"
    code = main(["verify", "--config", str(p), "--suite", "flow",
                 "--out", str(out)])
    assert code == EXIT_FAIL
    assert "FAIL flow:" in capsys.readouterr().out
    assert _load_report(out, "flow")["pass"] is False


def test_exit_config_unknown_suite(pair_toml, tmp_path, capsys):
    code = main(["verify", "--config", str(pair_toml),
                 "--suite", "nope", "--out", str(tmp_path / "r")])
    assert code == EXIT_CONFIG
    assert "unknown suite" in capsys.readouterr().err


def test_exit_config_missing_file(tmp_path):
    code = main(["verify", "--config", str(tmp_path / "missing.toml"),
                 "--suite", "flow", "--out", str(tmp_path / "r")])
    assert code == EXIT_CONFIG


def test_exit_config_wrong_scene_for_suite(pair_toml, tmp_path):
    # gauge-extension needs a gauge scene
    code = main(["verify", "--config", str(pair_toml),
                 "--suite", "gauge-extension", "--out",
                 str(tmp_path / "r")])
    assert code == EXIT_CONFIG


def test_exit_config_usage_error(capsys):
    # missing required arguments
    assert main(["verify", "--config", "x.toml"]) == EXIT_CONFIG
    capsys.readouterr()


def test_exit_runtime_on_broken_scene(tmp_path, capsys):
    # arcs that do not cover the circle blow up during construction
    p = tmp_path / "broken.toml"
    p.write_text('[scene]\nkind = "gauge"\ncocycle = "x"\n'
                 "arcs = [[0.0, 1.0], [2.0, 3.0]]\n")
    code = main(["verify", "--config", str(p), "--suite",
                 "groupoid-axioms", "--out", str(tmp_path / "r")])
    assert code == EXIT_RUNTIME
    assert "runtime error" in capsys.readouterr().err


def test_overrides_reach_report(pair_toml, tmp_path):
    out = tmp_path / "rep"
    code = main(["verify", "--config", str(pair_toml),
                 "--suite", "groupoid-axioms", "--out", str(out),
                 "--seed", "9", "--grid", "120", "--steps", "55"])
    assert code == EXIT_PASS
    meta = _load_report(out, "groupoid-axioms")["meta"]
    assert (meta["seed"], meta["grid"], meta["steps"]) == (9, 120, 55)


def test_reports_deterministic(pair_toml, tmp_path):
    reports = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        assert main(["verify", "--config", str(pair_toml),
                     "--suite", "lalg", "--out", str(out)]) == EXIT_PASS
        rep = _load_report(out, "lalg")
        rep.pop("timing")
        reports.append(rep)
    assert reports[0] == reports[1]


def test_multiple_suites_write_all_reports(tmp_path):
    p = tmp_path / "grp.toml"
    p.write_text(FAST_GROUP)
    out = tmp_path / "rep"
    code = main(["verify", "--config", str(p),
                 "--suite", "groupoid-axioms", "--suite", "lalg",
                 "--out", str(out)])
    assert code == EXIT_PASS
    assert (out / "groupoid-axioms.json").exists()
    assert (out / "lalg.json").exists()
