import json
import subprocess
import sys

import pytest
import tomli_w
from hypothesis import given, settings
from hypothesis import strategies as st

from asl2lab import cli, config as C, runner
from asl2lab.ensembles import EnsembleResult

HEADER = "param,ensemble,estimate_re,estimate_im,haar_ref,haar_stderr,abs_err,terms,runtime_ms,seed"


@pytest.mark.parametrize("name", C.PRESET_NAMES)
def test_preset_round_trip(name):
    cfg = C.preset(name)
    assert C.parse(cfg.to_toml()) == cfg


def test_brown_preset_contents():
    cfg = C.preset("brown")
    assert cfg.section == "parabolic" and cfg.q_primes_only
    assert cfg.q_grid == (2003, 20011, 200003)
    assert set(cfg.ensembles) == {"nonprimitive", "primitive", "twisted"}


def test_default_q_grid():
    assert C.primes_near([2000, 20000]) == (2003, 20011)
    grid = C.default_q_grid([2000], primes_only=False)
    assert 2003 in grid and any(q % 210 == 0 for q in grid)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.integers(1, 10**6), min_size=1, max_size=5, unique=True),
    st.integers(0, 2**63 - 1),
    st.integers(1, 16),
    st.lists(st.floats(-100, 100), min_size=1, max_size=3),
    st.booleans(),
)
def test_random_config_round_trip(grid, seed, workers, cs, timings):
    cfg = C.ExperimentConfig(
        n_grid=tuple(sorted(grid)), seed=seed, workers=workers, twist_c=tuple(cs), record_timings=timings,
        ensembles=("nonprimitive", "twisted"),
    ).validate()
    assert C.parse(cfg.to_toml()) == cfg


@pytest.mark.parametrize(
    "text",
    [
        'n_grid = [100, 10]',
        'n_grid = [0, 10]',
        'seed = -1',
        'workers = 0',
        'ensembles = ["sideways"]',
        'section = "spiral"',
        'f = "nonsense:1"',
        'psi = "gaussian:0,1"',
        'haar_samples = 10',
        'colour = "blue"',
        'seed = "seven"',
        'ensembles = ["primitive"]\nq_grid = [4, 9]\nq_primes_only = true',
        'this is not toml',
    ],
)
def test_invalid_configs(text):
    with pytest.raises(C.ConfigError):
        C.parse(text)


def test_missing_keys_come_from_preset():
    cfg = C.parse('preset = "strom"\nseed = 5')
    assert cfg.section == "constant:sqrt2,sqrt3" and cfg.seed == 5


def small_config(tmp_path, **kw):
    base = dict(
        preset="brown",
        n_grid=[2000, 4000, 8000],
        q_grid=[2003, 4001, 8009],
        haar_samples=20000,
        seed=11,
        output=str(tmp_path / "out"),
    )
    base.update(kw)
    path = tmp_path / "cfg.toml"
    path.write_text(tomli_w.dumps(base))
    return path


def test_run_writes_csv_and_json(tmp_path):
    path = small_config(tmp_path)
    assert cli.main(["run", "--config", str(path)]) == 0
    lines = (tmp_path / "out" / "results.csv").read_text().splitlines()
    assert lines[0] == HEADER
    assert len(lines) == 1 + 3 + 3 + 3
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["config"]["seed"] == 11


def test_csv_bit_identical_between_runs(tmp_path):
    path = small_config(tmp_path)
    cli.main(["run", "--config", str(path), "--out", str(tmp_path / "a")])
    cli.main(["run", "--config", str(path), "--out", str(tmp_path / "b"), "--workers", "2"])
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()


def test_constant_observable_gives_weight_integral(tmp_path):
    path = small_config(tmp_path, f="one", ensembles=["nonprimitive"])
    report = runner.run(C.load(path), tmp_path / "c")
    from asl2lab.weights import from_spec

    want = from_spec(report.config.psi).integral
    first = report.results[0]
    assert first.parameter == 2000
    assert abs(first.estimate.real - want) <= 3 / 2000


def test_seed_override_and_env_workers(tmp_path, monkeypatch):
    path = small_config(tmp_path, ensembles=["nonprimitive"])
    monkeypatch.setenv(cli.WORKERS_ENV, "2")
    assert cli.main(["run", "--config", str(path), "--seed", "3", "--out", str(tmp_path / "s")]) == 0
    report = json.loads((tmp_path / "s" / "report.json").read_text())
    assert report["config"]["seed"] == 3 and report["config"]["workers"] == 2
    monkeypatch.setenv(cli.WORKERS_ENV, "many")
    assert cli.main(["run", "--config", str(path)]) == cli.EXIT_CONFIG


def test_exit_code_config_error(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("n_grid = [5, 1]\n")
    assert cli.main(["run", "--config", str(bad)]) == cli.EXIT_CONFIG
    assert cli.main(["run", "--config", str(tmp_path / "missing.toml")]) == cli.EXIT_CONFIG


def test_exit_code_numeric_failure(tmp_path, monkeypatch):
    path = small_config(tmp_path, ensembles=["nonprimitive"])

    def broken(ens, *args, **kw):
        return EnsembleResult(args[3], ens, complex(float("nan"), 0), 0.0, 0.0, 1.0, 0, 0.0, 0)

    monkeypatch.setattr(runner, "run_ensemble", broken)
    assert cli.main(["run", "--config", str(path)]) == cli.EXIT_NUMERIC


def test_runtime_column_zero_unless_requested(tmp_path):
    path = small_config(tmp_path, ensembles=["nonprimitive"])
    rows = runner.run(C.load(path), tmp_path / "r").csv_text().splitlines()[1:]
    assert all(r.split(",")[8] == "0" for r in rows)


def test_presets_command(capsys):
    assert cli.main(["presets", "--list"]) == 0
    assert "brown" in capsys.readouterr().out
    assert cli.main(["presets", "--show", "strom"]) == 0
    assert C.parse(capsys.readouterr().out) == C.preset("strom")


def test_verify_group_suite(capsys):
    assert cli.main(["verify", "--suite", "group"]) == 0
    assert "[PASS] criterion  2" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "asl2lab", "presets", "--list"], capture_output=True, text=True)
    assert proc.returncode == 0 and "negative_control" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "asl2lab", "run", "--config", str(tmp_path / "nope.toml")],
                          capture_output=True, text=True)
    assert proc.returncode == 1
