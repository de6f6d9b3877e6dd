import pytest

from hesslab.reports import Criterion, CsvReport, fmt, write_summary
from hesslab.repo import Repo


def test_number_formatting():
    assert fmt(0.1 + 0.2) == "0.3"
    assert fmt(1.0 / 3.0) == "0.333333333333"
    assert fmt(True) == "1"
    assert fmt(None) == ""
    assert fmt(7) == "7"


def test_csv_report(tmp_path):
    rep = CsvReport("demo", ["a", "b"])
    rep.add(a=1, b=2.5)
    rep.extend([{"a": 2}])
    assert rep.render() == "a,b\n1,2.5\n2,\n"
    assert rep.write(tmp_path / "out").read_text() == rep.render()
    with pytest.raises(KeyError):
        rep.add(c=1)


def test_criterion_lines(tmp_path):
    ok = Criterion.at_most("solver.residual", 1e-9, 1e-8)
    bad = Criterion.at_least("garding.weak", 0.5, 0.999)
    assert ok.line() == "PASS solver.residual 1e-09 1e-08"
    assert bad.line() == "FAIL garding.weak 0.5 0.999"
    path = write_summary(tmp_path, [ok, bad])
    assert path.read_text().splitlines() == [ok.line(), bad.line()]


def test_ledger_history(tmp_path):
    repo = Repo(str(tmp_path / "db" / "ledger.sqlite"))
    crit = [Criterion.at_most("torus.residual", 1e-9, 1e-7), Criterion.at_most("torus.gauge", 0.0, 0.0)]
    assert repo.record("run-1", "torus", crit) == 2
    repo.record("run-2", "torus", crit[:1])
    rows = repo.history("torus.residual")
    assert [r.run_id for r in rows] == ["run-1", "run-2"]
    assert rows[0].passed and rows[0].command == "torus"
    assert repo.history("nothing") == []
