import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pseudonorm import cli, scenarios
from pseudonorm.errors import ConfigError, ScenarioUnknown
from pseudonorm.potential import load_table


def _run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = cli.main([*argv, "--out", str(out)])
    return code, out.read_text()


def _rows(text):
    cols, rows = cli.read_table(text)
    return [dict(zip(cols, r)) for r in rows]


def test_sweep_both_engines(tmp_path):
    code, text = _run(tmp_path, "sweep", "--potential", "monomial:n=2", "--grid", "10:1000:5:log")
    assert code == 0
    assert text.startswith("# pseudonorm ")
    rows = _rows(text)
    assert len(rows) == 5
    for r in rows:
        assert r["lam_re"] == 0 and r["lam_im"] == r["param"]
        assert r["ratio"] == pytest.approx(r["numeric"] / r["asymptotic"], rel=1e-15)
        assert abs(r["ratio"] - 1) < 0.02


def test_sweep_real_axis_asym_only(tmp_path):
    code, text = _run(tmp_path, "sweep", "--potential", "power:p=2", "--axis", "real",
                      "--mode", "asym", "--grid", "100:10000:3:log")
    rows = _rows(text)
    assert code == 0 and len(rows) == 3
    assert all(math.isnan(r["numeric"]) and r["asymptotic"] > 0 for r in rows)
    assert all(r["lam_im"] == 0 for r in rows)


def test_single_point_grid(tmp_path):
    code, text = _run(tmp_path, "sweep", "--grid", "100:100:1:log", "--mode", "asym")
    rows = _rows(text)
    assert len(rows) == 1 and rows[0]["param"] == 100


def test_row_errors_do_not_abort(tmp_path):
    code, text = _run(tmp_path, "sweep", "--potential", "log", "--grid", "10:100:2:log",
                      "--mode", "asym")
    rows = _rows(text)
    assert code == 0
    assert rows[0]["error"] == "" and rows[0]["asymptotic"] > 0
    assert "NoBracket" in rows[1]["error"]


def test_byte_identical_reruns(tmp_path):
    argv = ["sweep", "--grid", "10:100:3:log", "--tol", "1e-5"]
    _, a = _run(tmp_path, *argv, name="a.csv")
    _, b = _run(tmp_path, *argv, name="b.csv")
    assert a == b


def test_jobs_preserve_grid_order(tmp_path):
    _, a = _run(tmp_path, "sweep", "--grid", "10:100:4:log", "--jobs", "1", name="a.csv")
    _, b = _run(tmp_path, "sweep", "--grid", "10:100:4:log", "--jobs", "2", name="b.csv")
    body = lambda t: [ln for ln in t.splitlines() if not ln.startswith("#")]  # noqa: E731
    assert body(a) == body(b)


def test_csv_json_equivalence(tmp_path):
    argv = ["sweep", "--potential", "log", "--grid", "10:100:2:log", "--mode", "asym"]
    _, c = _run(tmp_path, *argv, name="a.csv")
    _, j = _run(tmp_path, *argv, "--format", "json", name="a.json")
    cc, cr = cli.read_table(c)
    jc, jr = cli.read_table(j)
    assert cc == jc

    def same(x, y):
        if isinstance(x, float) and isinstance(y, float):
            return (math.isnan(x) and math.isnan(y)) or x == y
        return (x or "") == (y or "")

    assert all(same(x, y) for a, b in zip(cr, jr) for x, y in zip(a, b))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(allow_nan=True, allow_infinity=True), min_size=1, max_size=5))
def test_table_format_roundtrip(values):
    cols = [f"c{i}" for i in range(len(values))] + ["error"]
    row = {c: v for c, v in zip(cols, values)}
    row["error"] = "x"
    parsed = []
    for fmt in ("csv", "json"):
        buf = io.StringIO()
        cli.write_table(buf, cols, [row], {}, fmt)
        parsed.append(cli.read_table(buf.getvalue())[1][0])
    for got in parsed:
        for v, g in zip(values, got):
            assert (math.isnan(v) and math.isnan(g)) or v == g


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"potential": "monomial:n=2", "grid": "10:100:3:log",
                               "mode": "asym"}))
    _, text = _run(tmp_path, "sweep", "--config", str(cfg), "--grid", "10:10:1:lin")
    rows = _rows(text)
    assert len(rows) == 1 and math.isnan(rows[0]["numeric"])


def test_config_errors_name_line_and_field(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"potential": "monomial:n=2",\n "grid": }')
    with pytest.raises(ConfigError, match="line 2"):
        cli.build_config(cli.SweepConfig, cli.build_parser().parse_args(["sweep"]), str(bad))
    bad.write_text('{"mode": "fast"}')
    with pytest.raises(ConfigError, match="'mode'"):
        cli.build_config(cli.SweepConfig, cli.build_parser().parse_args(["sweep"]), str(bad))
    assert cli.main(["sweep", "--config", str(bad)]) == 2


@pytest.mark.parametrize("text", ["1:2:3", "5:1:3:log", "0:1:3:log", "1:2:0:lin", "1:2:3:cubic"])
def test_grid_rejects(text):
    with pytest.raises(ConfigError):
        cli.parse_grid(text)


def test_grid_spacing():
    assert np.allclose(cli.parse_grid("1:100:3:log"), [1, 10, 100])
    assert np.allclose(cli.parse_grid("0:1:3:lin"), [0, 0.5, 1])


def test_levels_command(tmp_path):
    code, text = _run(tmp_path, "levels", "--potential", "power:p=2/3", "--grid",
                      "100:1000:3:log")
    rows = _rows(text)
    assert code == 0 and len(rows) == 3
    assert all("LogDomain" in r["error"] and r["critical_boundary"] >= 0 for r in rows)


def test_verify_exit_codes(monkeypatch, capsys):
    assert cli.main(["verify", "--scenario", "airy-constants"]) == 0
    assert "PASS" in capsys.readouterr().out
    failing = lambda: [scenarios.Check("x", 1.0, "never", False)] * 200  # noqa: E731
    monkeypatch.setitem(scenarios.SCENARIOS, "always-fails", failing)
    assert cli.main(["verify", "--scenario", "always-fails"]) == 125


def test_unknown_scenario():
    with pytest.raises(ScenarioUnknown):
        scenarios.run_scenario("no-such-thing")
    assert cli.main(["verify", "--scenario", "no-such-thing"]) == 2


def test_inverse_command_writes_table(tmp_path, capsys):
    out = tmp_path / "inv.csv"
    assert cli.main(["inverse", "--rate", "japanese:alpha=1", "--out", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["loglog_slope_1e2_1e6"] == pytest.approx(0.4, rel=0.05)
    V = load_table(str(out))
    assert V.V2(100.0) > 0


def test_check_command(capsys):
    assert cli.main(["check", "--potential", "monomial:n=2"]) == 0
    assert json.loads(capsys.readouterr().out)["passed"]
    assert cli.main(["check", "--potential", "log", "--mode", "R"]) == 1


def test_norm_and_asym_commands(capsys):
    assert cli.main(["norm", "--potential", "monomial:n=2", "--lam", "100i", "--tol", "1e-6"]) == 0
    num = json.loads(capsys.readouterr().out)["value"]
    assert cli.main(["asym", "--potential", "monomial:n=2", "--param", "100"]) == 0
    est = json.loads(capsys.readouterr().out)["value"]
    assert num / est == pytest.approx(1.0, abs=0.01)


def test_cache_flag_persists(tmp_path, monkeypatch):
    monkeypatch.delenv("PSEUDONORM_CACHE", raising=False)
    path = tmp_path / "cache.json"
    assert cli.main(["--cache", str(path), "airy", "--mu", "0.125"]) == 0
    assert json.loads(path.read_text())["entries"]


def test_figure_data_files(tmp_path):
    checks = scenarios.figure_data(str(tmp_path))
    assert all(c.passed for c in checks)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == sorted(f"{n}_{a}.csv" for n, (_, _, _, rg) in scenarios.FIGURE_SET.items()
                           for a in (["imag", "real"] if rg else ["imag"]))
