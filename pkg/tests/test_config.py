import pytest
from pydantic import ValidationError

from hesslab.config import build_run_config, grid_points, load_settings, parse_sweep, read_config_file
from hesslab.errors import ConfigError


def test_range_sweep_is_inclusive():
    vals = parse_sweep("2.0:6.5:0.5")
    assert len(vals) == 10
    assert vals[0] == 2.0 and vals[-1] == 6.5


def test_list_sweep_and_empty():
    assert parse_sweep("1,2.5, 4") == [1.0, 2.5, 4.0]
    assert parse_sweep(None) == []
    assert parse_sweep([1, 2]) == [1.0, 2.0]


@pytest.mark.parametrize("text", ["1:2", "1:2:0", "a,b", "1:x:0.5"])
def test_bad_sweeps(text):
    with pytest.raises(ConfigError):
        parse_sweep(text)


def test_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# stability run\nn = 3\nm=2\nq-sweep = 2:3:0.5\n\ngrid=9  # coarse\n")
    values = read_config_file(path)
    assert values == {"n": "3", "m": "2", "q_sweep": [2.0, 2.5, 3.0], "grid": "9"}


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "missing.cfg")
    bad = tmp_path / "bad.cfg"
    bad.write_text("n 3\n")
    with pytest.raises(ConfigError):
        read_config_file(bad)


def test_flags_win_over_the_file():
    cfg = build_run_config("solve", {"n": "3", "m": "2", "grid": "9"}, {"grid": 11, "m": None, "q_sweep": "1,2"})
    assert (cfg.n, cfg.m, cfg.grid) == (3, 2, 11)
    assert cfg.q_sweep == [1.0, 2.0]
    assert cfg.command == "solve"


@pytest.mark.parametrize("values", [
    {"n": 4, "m": 1},
    {"n": 2, "m": 3},
    {"grid": 3},
    {"domain": "torus"},
    {"spacing": -0.1},
    {"tol": 0},
])
def test_invalid_runs(values):
    with pytest.raises(ValidationError):
        build_run_config("solve", {}, values)


def test_unknown_command():
    with pytest.raises(ValidationError):
        build_run_config("plot", {}, {})


def test_grid_points_from_spacing():
    assert grid_points(build_run_config("solve", {}, {"grid": 9})) == 9
    assert grid_points(build_run_config("solve", {}, {"spacing": 0.125})) == 17


def test_settings_from_environment(isolated_env, monkeypatch):
    monkeypatch.setenv("HESSLAB_THREADS", "3")
    monkeypatch.setenv("HESSLAB_LOG_LEVEL", "debug")
    s = load_settings()
    assert s.threads == 3
    assert s.log_level == "DEBUG"
    assert s.db_path == str(isolated_env / "ledger.sqlite")
    monkeypatch.setenv("HESSLAB_SEED", "seven")
    with pytest.raises(ConfigError):
        load_settings()
