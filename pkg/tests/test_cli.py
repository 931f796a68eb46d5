import json
import math
import subprocess
import sys

import pytest

from biphoton import cli
from biphoton.cli import (
    ConfigError,
    RunConfig,
    dump_scenario,
    load_scenario,
    main,
    parse_angle,
    parse_args,
)


def parse(argv, env=None):
    return parse_args(argv, environ=env or {})[0]


def test_scan_flags():
    cfg = parse(["scan", "--points", "360", "--seed", "42"])
    assert (cfg.command, cfg.points, cfg.seed, cfg.trials) == ("scan", 360, 42, RunConfig().trials)


def test_global_flags_before_subcommand():
    cfg = parse(["--seed", "9", "scan"])
    assert cfg.seed == 9


def test_chsh_defaults_are_optimal_quadruple():
    cfg = parse(["chsh"])
    assert (cfg.a, cfg.a_prime, cfg.b, cfg.b_prime) == (0, math.pi / 2, math.pi / 4, 3 * math.pi / 4)


def test_cat_amplitude_validation():
    # 0.5477^2 + 0.8367^2 = 1.0000422, norm off by 2.1e-5
    with pytest.raises(ConfigError):
        parse(["cat", "--c1", "0.5477", "--c2", "0.8367"])
    cfg = parse(["cat", "--c1", "0.5477225575", "--c2", "0.8366600265"])
    assert abs(abs(cfg.c1) ** 2 + abs(cfg.c2) ** 2 - 1) < 1e-15


@pytest.mark.parametrize(
    "text, value",
    [
        ("pi/3", math.pi / 3),
        ("-pi/2", -math.pi / 2),
        ("3pi/4", 3 * math.pi / 4),
        ("3*pi/4", 3 * math.pi / 4),
        ("pi", math.pi),
        ("2pi", 2 * math.pi),
        ("1.25", 1.25),
    ],
)
def test_parse_angle(text, value):
    assert parse_angle(text) == value


@pytest.mark.parametrize("text", ["30deg", "pi/", "nan", "inf", ""])
def test_parse_angle_rejects(text):
    with pytest.raises(ConfigError):
        parse_angle(text)


def test_precedence_env_scenario_flags(tmp_path):
    f = tmp_path / "s.cfg"
    f.write_text("command = trials\nseed = 5\ntrials = 10\n")
    env = {"BIPHOTON_SEED": "3"}
    assert parse(["scan"], env).seed == 3
    cfg = parse(["--scenario", str(f)], env)
    assert (cfg.command, cfg.seed, cfg.trials) == ("trials", 5, 10)
    cfg = parse(["scan", "--scenario", str(f), "--seed", "7"], env)
    assert (cfg.command, cfg.seed, cfg.trials) == ("scan", 7, 10)


def test_load_scenario_basic(tmp_path):
    f = tmp_path / "a.cfg"
    f.write_text("# coarse correlation scan\ncommand = scan\npoints = 8   # coarse\n\n")
    assert load_scenario(f) == RunConfig(command="scan", points=8)


def test_load_scenario_pi_over_3(tmp_path):
    f = tmp_path / "b.cfg"
    f.write_text("command = trials\nphi_s = 1.0471975512\n")
    assert abs(load_scenario(f).phi_s - math.pi / 3) < 1e-10
    f.write_text("command = trials\nphi_s = pi/3\n")
    assert load_scenario(f).phi_s == math.pi / 3


def test_load_scenario_unknown_key(tmp_path):
    f = tmp_path / "c.cfg"
    f.write_text("foo = 1\n")
    with pytest.raises(ConfigError, match=r":1: unknown key 'foo'"):
        load_scenario(f)


def test_load_scenario_parse_error_names_line(tmp_path):
    f = tmp_path / "d.cfg"
    f.write_text("command = scan\npoints = eight\n")
    with pytest.raises(ConfigError, match=r":2: malformed integer"):
        load_scenario(f)
    f.write_text("command = scan\njust words\n")
    with pytest.raises(ConfigError, match=r":2:"):
        load_scenario(f)


def test_load_scenario_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_scenario(tmp_path / "nope.cfg")


@pytest.mark.parametrize("command", cli.COMMANDS)
def test_dump_load_round_trip(tmp_path, command):
    defaults = RunConfig(command=command)
    f = tmp_path / "rt.cfg"
    f.write_text(dump_scenario(defaults))
    assert load_scenario(f) == defaults


def test_help_lists_every_flag_with_default():
    text = cli.build_parser().format_help()
    sub_help = cli.build_parser()._subparsers._group_actions[0].choices["scan"].format_help()
    for name in cli.FIELDS:
        if name in ("command", "format_version"):
            continue
        flag = "--" + name.replace("_", "-")
        assert flag in text and flag in sub_help
    for flag in ("--scenario", "--quiet", "--out-csv", "--out-json", "--seed", "--trials", "--points"):
        assert flag in text
    assert text.count("(default:") >= len(cli.FIELDS) - 2


def run_cli(*args, env=None):
    import os

    full_env = dict(os.environ)
    full_env.pop("BIPHOTON_SEED", None)
    full_env.update(env or {})
    return subprocess.run(
        [sys.executable, "-m", "biphoton", *args], capture_output=True, text=True, env=full_env
    )


@pytest.mark.parametrize(
    "args",
    [["scan", "--bogus", "1"], ["scan", "--points", "abc"], [], ["teleport"], ["scan", "--points", "1"]],
)
def test_usage_errors_are_single_line(args):
    proc = run_cli(*args)
    assert proc.returncode == 2
    assert len(proc.stderr.strip().splitlines()) == 1
    assert proc.stderr.startswith("biphoton: error:")


def test_scan_csv_rows(tmp_path):
    out = tmp_path / "scan.csv"
    assert main(["scan", "--points", "4", "--trials", "0", "--out-csv", str(out), "--quiet"]) == 0
    lines = out.read_bytes().split(b"\n")
    assert lines[-1] == b"" and len(lines) == 6  # header + 4 rows + trailing newline
    assert lines[0] == b"delta,c_analytic,c_empirical,n_trials,n11,n12,n21,n22"
    assert b"\r" not in out.read_bytes()


def test_numbers_round_trip_through_csv(tmp_path):
    out = tmp_path / "scan.csv"
    main(["scan", "--points", "7", "--trials", "0", "--out-csv", str(out), "--quiet"])
    rows = out.read_text().splitlines()[1:]
    deltas = [float(r.split(",")[0]) for r in rows]
    assert deltas == [2 * math.pi * i / 7 for i in range(7)]


def test_identical_config_gives_identical_bytes(tmp_path):
    paths = []
    for k in range(2):
        c, j = tmp_path / f"{k}.csv", tmp_path / f"{k}.json"
        main(["trials", "--phi-s", "pi/3", "--trials", "5000", "--out-csv", str(c),
              "--out-json", str(j), "--quiet", "--workers", str(1 + 3 * k)])
        paths.append((c.read_bytes(), j.read_bytes()))
    assert paths[0] == paths[1]


def test_nosignal_json_summary(tmp_path):
    j = tmp_path / "ns.json"
    assert main(["nosignal", "--trials", "0", "--out-json", str(j), "--quiet"]) == 0
    data = json.loads(j.read_text())
    assert data["results"]["max_marginal_deviation"] < 1e-12
    assert data["gates"]["max_marginal_deviation"]["pass"] is True
    assert data["format_version"] == cli.FORMAT_VERSION and data["seed"] == 42
    assert "timing_seconds" not in data


def test_timing_is_opt_in(tmp_path):
    j = tmp_path / "t.json"
    main(["ambiguity", "--out-json", str(j), "--quiet", "--timing"])
    assert "timing_seconds" in json.loads(j.read_text())


def test_exit_code_reflects_gates(monkeypatch, tmp_path):
    from biphoton.experiments import ExperimentResult

    failing = ExperimentResult("x", ["a"], [[1]], {"g": {"pass": False, "value": 1.0, "tolerance": 0.0}})
    monkeypatch.setattr(cli, "run", lambda cfg: failing)
    assert main(["zwm", "--quiet"]) == cli.EXIT_GATES_FAILED


def test_io_failure_exit_code(tmp_path):
    bad = tmp_path / "missing" / "out.csv"
    assert main(["ambiguity", "--out-csv", str(bad), "--quiet"]) == cli.EXIT_IO


def test_stdout_summary(capsys):
    assert main(["decohere", "--theta", "pi/4", "--collisions", "5"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["command"] == "decohere" and data["passed"]


def test_seed_env_lowest_precedence():
    proc = run_cli("ambiguity", env={"BIPHOTON_SEED": "77"})
    assert json.loads(proc.stdout)["seed"] == 77
    proc = run_cli("ambiguity", "--seed", "5", env={"BIPHOTON_SEED": "77"})
    assert json.loads(proc.stdout)["seed"] == 5
