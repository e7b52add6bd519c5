from __future__ import annotations

import csv
import io
import json

import pytest
from click.testing import CliRunner

from fixpoint_lab.cli import main
from fixpoint_lab.config import SEED_ENV, ConfigError, RunConfig, read_config

SMALL = ["--samples", "500", "--grid", "21"]


@pytest.fixture
def runner():
    return CliRunner()


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_check_passes_and_reports_in_fixed_order(runner, tmp_path):
    cfg = _write(tmp_path, "c.cfg", "map = piecewise_kannan\nconditions = metric, kannan, generalized\n"
                                    "lambda = 0.7\npata = embed\n")
    res = runner.invoke(main, ["check", "--config", cfg, *SMALL])
    assert res.exit_code == 0, res.output
    doc = json.loads(res.output)
    assert list(doc) == ["toolkit", "version", "command", "pass", "config", "reports", "solves", "criteria"]
    assert [r["condition_id"] for r in doc["reports"]] == ["metric_axioms", "kannan", "generalized"]
    assert list(doc["reports"][1])[:5] == ["condition_id", "pass", "max_slack_violation", "witness",
                                           "samples_checked"]
    assert doc["config"]["lambda"] == 0.7


def test_check_failure_exits_one(runner, tmp_path):
    cfg = _write(tmp_path, "c.cfg", "map = half_scaling\nconditions = kannan\nlambda = 0.999\n")
    out = tmp_path / "r.json"
    res = runner.invoke(main, ["check", "--config", cfg, "--out", str(out)])
    assert res.exit_code == 1
    doc = json.loads(out.read_text())
    assert doc["pass"] is False
    assert doc["reports"][0]["max_slack_violation"] >= 0.25 - 1e-10


@pytest.mark.parametrize("args", [
    ["check", "--map", "nope"],
    ["solve", "--map", "nope"],
    ["check", "--map", "identity"],  # no conditions selected
])
def test_usage_errors_exit_two(runner, args):
    assert runner.invoke(main, args).exit_code == 2


def test_bad_config_key_is_a_usage_error(runner, tmp_path):
    cfg = _write(tmp_path, "c.cfg", "mapp = identity\n")
    assert runner.invoke(main, ["check", "--config", cfg]).exit_code == 2


def test_solve_writes_json_and_csv(runner, tmp_path):
    out = tmp_path / "solve.json"
    res = runner.invoke(main, ["solve", "--map", "constant_0.3", "--out", str(out), *SMALL])
    assert res.exit_code == 0, res.output
    doc = json.loads(out.read_text())
    assert all(s["fixed_point"] == 0.3 for s in doc["solves"])
    rows = list(csv.reader(io.StringIO((tmp_path / "solve.csv").read_text())))
    assert rows[0] == ["n", "x", "c_n", "d_n", "envelope_n"]
    assert rows[1][0] == "0"


def test_solve_box_map_csv_columns(runner, tmp_path):
    out = tmp_path / "radial.json"
    res = runner.invoke(main, ["solve", "--map", "radial_kannan_2d", "--out", str(out), *SMALL])
    assert res.exit_code == 0, res.output
    header = (tmp_path / "radial.csv").read_text().splitlines()[0]
    assert header == "n,x_0,x_1,c_n,d_n,envelope_n"


def test_solve_identity_fails(runner, tmp_path):
    cfg = _write(tmp_path, "c.cfg", "map = identity\nstart = 0.2, 0.8\n")
    res = runner.invoke(main, ["solve", "--config", cfg, *SMALL])
    assert res.exit_code == 1
    doc = json.loads(res.output)
    uniq = [r for r in doc["reports"] if r["condition_id"] == "uniqueness"][0]
    assert uniq["pass"] is False


def test_includes_and_extensions(tmp_path, runner):
    _write(tmp_path, "base.cfg", "seed = 7\nmap.tilted.family = affine\nmap.tilted.params = 0.3, 0.1\n"
                                 "map.tilted.space = interval:0,1\nmap.tilted.status = kannan, banach, generalized_b\n"
                                 "map.tilted.fixed_point = 0.14285714285714285\n")
    cfg = _write(tmp_path, "top.cfg", "include = base.cfg\nmap = tilted\nconditions = metric\n")
    kv = read_config(cfg)
    assert kv["seed"] == "7"
    rc = RunConfig.from_mapping(kv, env={})
    assert rc.seed == 7
    assert rc.entry().map(0.5) == pytest.approx(0.25)
    assert runner.invoke(main, ["check", "--config", cfg, *SMALL]).exit_code == 0


def test_include_cycle_is_rejected(tmp_path):
    _write(tmp_path, "a.cfg", "include = b.cfg\n")
    _write(tmp_path, "b.cfg", "include = a.cfg\n")
    with pytest.raises(ConfigError):
        read_config(tmp_path / "a.cfg")


def test_seed_precedence():
    assert RunConfig.from_mapping({}, env={SEED_ENV: "99"}).seed == 99
    assert RunConfig.from_mapping({"seed": "5"}, env={SEED_ENV: "99"}).seed == 5
    assert RunConfig.from_mapping({"seed": "5"}, {"seed": 3}, env={SEED_ENV: "99"}).seed == 3
    assert RunConfig.from_mapping({}, env={}).seed == 12345


def test_reports_are_byte_identical(runner, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    cfg = _write(tmp_path, "c.cfg", "map = radial_kannan_2d\nconditions = metric, kannan, generalized\n"
                                    "lambda = 0.7\npata = order:10\n")
    for out in (a, b):
        assert runner.invoke(main, ["check", "--config", cfg, "--seed", "4", "--out", str(out), *SMALL]).exit_code == 0
    assert a.read_bytes() == b.read_bytes()


def test_suite_restricted_to_neither_maps_exits_zero(runner, tmp_path):
    cfg = _write(tmp_path, "c.cfg", "catalog = identity, doubling_capped\nsamples = 500\npoints = 200\n")
    out = tmp_path / "suite.json"
    res = runner.invoke(main, ["suite", "--config", cfg, "--out", str(out), "--grid", "21"])
    assert res.exit_code == 0, res.output
    doc = json.loads(out.read_text())
    statuses = {c["id"]: c["status"] for c in doc["criteria"]}
    assert statuses[1] == "skipped"
    assert statuses[10] == "pass"
    gen = [r for r in doc["reports"] if r["condition_id"].endswith(":generalized")]
    assert gen and not any(r["pass"] for r in gen)
