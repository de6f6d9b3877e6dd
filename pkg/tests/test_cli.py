import pytest
from typer.testing import CliRunner

from hesslab.cli import EXIT_FAIL, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, app
from hesslab.fieldio import read_field

runner = CliRunner()


def invoke(out, *args):
    return runner.invoke(app, ["--out-dir", str(out), *args])


def test_integrability_writes_reports(isolated_env):
    out = isolated_env / "run"
    res = invoke(out, "integrability", "--n", "3", "--m", "2")
    assert res.exit_code == EXIT_OK, res.output
    assert (out / "integrability.csv").read_text().startswith("q,slope,exact,rel_error,integrable\n")
    assert (out / "log_density.csv").exists()
    summary = (out / "summary.txt").read_text().splitlines()
    assert summary and all(line.startswith("PASS ") for line in summary)


def test_runs_are_deterministic(isolated_env):
    a, b = isolated_env / "a", isolated_env / "b"
    for out in (a, b):
        assert invoke(out, "--no-ledger", "integrability", "--n", "2", "--m", "1").exit_code == EXIT_OK
    assert (a / "integrability.csv").read_text() == (b / "integrability.csv").read_text()


def test_verify_bruteforce(isolated_env):
    out = isolated_env / "verify"
    res = invoke(out, "verify", "--suite", "bruteforce", "--samples", "25")
    assert res.exit_code == EXIT_OK, res.output
    assert "PASS bruteforce.elem_sym" in (out / "summary.txt").read_text()


def test_solve_writes_the_field(isolated_env):
    out = isolated_env / "solve"
    res = invoke(out, "solve", "--n", "1", "--m", "1", "--grid", "9", "--f", "const:2", "--phi", "quad:2")
    assert res.exit_code == EXIT_OK, res.output
    u = read_field(out / "solution.hf")
    assert u.domain.shape == (9, 9)
    summary = (out / "summary.txt").read_text()
    assert "PASS solve.quadratic" in summary and "PASS solve.poisson" in summary


def test_solve_from_a_field_file(isolated_env):
    out = isolated_env / "first"
    assert invoke(out, "solve", "--n", "1", "--m", "1", "--grid", "9").exit_code == EXIT_OK
    again = invoke(isolated_env / "second", "solve", "--n", "1", "--m", "1",
                   "--input", str(out / "solution.hf"), "--output", "copy.hf")
    assert again.exit_code == EXIT_OK, again.output
    assert (isolated_env / "second" / "copy.hf").exists()


def test_config_file_and_flags(isolated_env):
    cfg = isolated_env / "run.cfg"
    cfg.write_text("n = 1\nm = 1\ngrid = 9\nf = const:-1\n")
    res = invoke(isolated_env / "cfg", "solve", "--config", str(cfg), "--f", "const:1")
    assert res.exit_code == EXIT_OK, res.output


def test_history_lists_ledger_rows(isolated_env):
    assert invoke(isolated_env / "h", "solve", "--n", "1", "--m", "1", "--grid", "9").exit_code == EXIT_OK
    res = invoke(isolated_env / "h", "history", "solve.residual")
    assert res.exit_code == EXIT_OK
    assert "No ledger entries" not in res.output
    empty = invoke(isolated_env / "h", "history", "no.such.criterion")
    assert empty.exit_code == EXIT_OK
    assert "No ledger entries" in empty.output


@pytest.mark.parametrize("args", [
    ("solve", "--suite", "nonsense"),
    ("solve", "--n", "4"),
    ("solve", "--n", "2", "--m", "3"),
    ("integrability", "--n", "2", "--m", "2"),
    ("integrability", "--n", "3", "--m", "2", "--q-sweep", "1,2"),
    ("solve", "--f", "wobble:1"),
])
def test_usage_errors(isolated_env, args):
    assert invoke(isolated_env / "bad", *args).exit_code == EXIT_USAGE


def test_negative_density_is_a_numerical_failure(isolated_env):
    res = invoke(isolated_env / "neg", "solve", "--n", "1", "--m", "1", "--grid", "9", "--f", "const:-1")
    assert res.exit_code == EXIT_NUMERICAL


def test_failed_criterion_exit_code(isolated_env):
    # a tolerance the solver cannot reach in one iteration
    res = invoke(isolated_env / "fail", "solve", "--n", "2", "--m", "2", "--grid", "9",
                 "--f", "cos:0.1", "--phi", "quad:1", "--tol", "1e-300", "--max-iter", "1")
    assert res.exit_code == EXIT_FAIL


@pytest.mark.slow
def test_torus_command(isolated_env):
    out = isolated_env / "torus"
    res = invoke(out, "torus", "--n", "1", "--m", "1", "--grid", "16")
    assert res.exit_code == EXIT_OK, res.output
    assert (out / "torus.csv").exists() and (out / "torus_solution.hf").exists()


@pytest.mark.slow
def test_regularity_tepsilon(isolated_env):
    out = isolated_env / "reg"
    res = invoke(out, "regularity", "--n", "1", "--m", "1", "--grid", "17", "--suite", "tepsilon")
    assert res.exit_code == EXIT_OK, res.output
    assert (out / "tepsilon_quadratic.csv").exists()
    assert "PASS tepsilon.quadratic" in (out / "summary.txt").read_text()
