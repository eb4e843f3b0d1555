import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gaussqfi import cli
from gaussqfi.config import ConfigError, dump_scenario, figure_ids, load_figure, parse
from gaussqfi.interferometers import ScenarioConfig

LOSSLESS = """\
[run]
command = qfi

[scenario]
family = yurke
r1 = max
n_phi = 0.1
"""

T_SWEEP = """\
[run]
command = sweep

[scenario]
family = yurke
n_phi = 0.1

[optimize]
r1 = yes

[sweep]
axis = T
start = 0.5
stop = 1.0
num = 51
"""


def _write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def _table(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


@pytest.mark.parametrize("text, where", [
    ("[run]\ncommand = qfi\n[bogus]\nx = 1\n", ":3:"),
    ("[run]\ncommand = qfi\n\n[scenario]\nfamily = yurke\nr9 = 1\n", ":6: [scenario] r9"),
    ("[run]\ncommand = qfi\n[scenario]\nr1 = fast\n", ":4: [scenario] r1"),
    ("command = qfi\n", ":1:"),
    ("[run]\ncommand = qfi\n[scenario]\nthis line is broken\n", ":4:"),
    ("[run]\ncommand = dance\n", ":2: [run] command"),
    ("[run]\ncommand = sweep\n[scenario]\nn_phi = 0.1\n[sweep]\naxis = T\nvalues = 0.5, 0.7, 0.6\n", ":7: [sweep] values"),
    ("[run]\ncommand = qfi\n[scenario]\neta = 1.5\n", "eta"),
])
def test_parse_errors_carry_location(text, where):
    with pytest.raises(ConfigError) as err:
        parse(text, "case.ini")
    assert where in str(err.value)
    assert str(err.value).startswith("case.ini") or where == "eta"


@pytest.mark.parametrize("fid", figure_ids())
def test_every_figure_spec_parses(fid):
    spec = load_figure(fid)
    assert spec.command in cli.COMMANDS


def test_unknown_figure_id():
    with pytest.raises(ConfigError):
        load_figure("fig-99")


@given(r1=st.floats(0, 2), eta=st.floats(0, 1), theta=st.floats(-7, 7), alpha=st.complex_numbers(max_magnitude=3),
       discard=st.booleans())
def test_scenario_round_trip(r1, eta, theta, alpha, discard):
    cfg = ScenarioConfig(family="mandel", r1=r1, eta=eta, theta=theta, alpha=alpha, discard_a=discard)
    spec = parse("[run]\ncommand = qfi\n" + dump_scenario(cfg))
    assert spec.scenario == cfg


def test_qfi_all_routes_agree(tmp_path, capsys):
    code, out, err = _run(["--config", _write(tmp_path, LOSSLESS)], capsys)
    assert code == 0
    header, rows = _table(out)
    assert header == ["route", "qfi", "abs_delta", "rel_delta"]
    routes = {r[0]: float(r[1]) for r in rows}
    assert {"pure", "eigendecomp", "vectorized_oracle", "analytic"} <= set(routes)
    for value in routes.values():
        assert value == pytest.approx(0.44, abs=1e-8)
    assert "n_phi" in err


def test_sweep_crosses_mzi_at_critical_transmission(tmp_path, capsys):
    out_path = tmp_path / "t.csv"
    code, _, _ = _run(["--config", _write(tmp_path, T_SWEEP), "--out", str(out_path)], capsys)
    assert code == 0
    header, rows = _table(out_path.read_text())
    for name in ("T", "r1", "qfi", "snl", "mzi"):
        assert name in header
    col = {h: np.array([float(r[i]) for r in rows]) for i, h in enumerate(header) if h not in ("converged", "error")}
    gap = col["qfi"] - col["mzi"]
    # grid spacing is 0.01: the first point above the MZI brackets the crossing
    first = col["T"][np.argmax(gap > 1e-9)]
    assert 0.871 - 1e-3 < first <= 0.871 + 0.01 + 1e-3
    assert np.all(gap[col["T"] < 0.87] == 0.0)
    np.testing.assert_allclose(col["snl"], 0.4)


def test_sweep_crossing_fine(tmp_path, capsys):
    text = T_SWEEP.replace("start = 0.5", "start = 0.86").replace("stop = 1.0", "stop = 0.88").replace(
        "num = 51", "num = 21")
    out_path = tmp_path / "fine.csv"
    assert _run(["--config", _write(tmp_path, text), "--out", str(out_path)], capsys)[0] == 0
    header, rows = _table(out_path.read_text())
    T = np.array([float(r[header.index("T")]) for r in rows])
    r1 = np.array([float(r[header.index("r1")]) for r in rows])
    first = T[np.argmax(r1 > 0)]
    assert first == pytest.approx(0.871, abs=1e-3)


def test_csv_byte_stable(tmp_path, capsys):
    text = T_SWEEP.replace("num = 51", "num = 6")
    path = _write(tmp_path, text)
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    assert _run(["--config", path, "--out", str(a)], capsys)[0] == 0
    assert _run(["--config", path, "--out", str(b)], capsys)[0] == 0
    assert _run(["--config", path, "--out", str(c), "--jobs", "2"], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()


def test_twelve_significant_digits():
    assert cli.fmt(math.pi) == "3.14159265359"
    assert cli.fmt(float("nan")) == "nan"
    assert cli.fmt(True) == "true"
    assert cli.to_csv(["a", "b"], [[1.0, 2.5]]) == "a,b\n1,2.5\n"


def test_optimize_command(tmp_path, capsys):
    text = T_SWEEP.replace("command = sweep", "command = optimize").split("[sweep]")[0]
    text = text.replace("n_phi = 0.1", "n_phi = 0.1\nT = 0.95")
    code, out, _ = _run(["--config", _write(tmp_path, text)], capsys)
    assert code == 0
    header, rows = _table(out)
    assert len(rows) == 1 and float(rows[0][header.index("qfi")]) > 4 * 0.95 * 0.1


def test_positional_command_overrides(tmp_path, capsys):
    code, out, _ = _run(["optimize", "--config", _write(tmp_path, T_SWEEP.split("[sweep]")[0])], capsys)
    header, rows = _table(out)
    assert code == 0 and float(rows[0][header.index("qfi")]) == pytest.approx(0.44, rel=1e-9)


def test_usage_errors(tmp_path, capsys):
    assert _run([], capsys)[0] == 1
    assert _run(["qfi"], capsys)[0] == 1
    assert _run(["--config", str(tmp_path / "missing.ini")], capsys)[0] == 1
    assert _run(["--seed-figures", "nope"], capsys)[0] == 1
    assert _run(["--seed-figures", "cfi-a", "--cutoff", "21"], capsys)[0] == 1
    assert _run(["--config", _write(tmp_path, LOSSLESS), "--out", str(tmp_path / "no" / "x.csv")], capsys)[0] == 1
    assert _run(["--config", _write(tmp_path, LOSSLESS), "--r2-cap", "-1"], capsys)[0] == 1
    code, _, err = _run(["--bogus-flag"], capsys)
    assert code == 1 and "error" in err


def test_infeasible_reports_bound(tmp_path, capsys):
    text = LOSSLESS.replace("r1 = max", "r1 = 0.5")
    code, _, err = _run(["--config", _write(tmp_path, text)], capsys)
    assert code == 1
    assert f"r1 <= {math.asinh(math.sqrt(0.1)):.12g}" in err


def test_failed_sweep_points_exit_numeric(tmp_path, capsys):
    text = """\
[run]
command = sweep
[scenario]
family = yurke
n_phi = 0.1
[sweep]
axis = r1
values = 0.1, 0.5
"""
    code, out, _ = _run(["--config", _write(tmp_path, text)], capsys)
    assert code == 3
    header, rows = _table(out)
    assert rows[0][header.index("error")] == "" and "InfeasibleDose" in rows[1][header.index("error")]


def test_verify_exit_codes(tmp_path, capsys):
    code, out, _ = _run(["verify"], capsys)
    assert code == 0
    header, rows = _table(out)
    assert header == ["formula", "points", "max_rel_error", "passed"]
    assert all(int(r[1]) >= 200 and r[3] == "true" for r in rows)
    strict = "[run]\ncommand = verify\n[verify]\npoints = 5\nrtol = 1e-300\n"
    assert _run(["--config", _write(tmp_path, strict)], capsys)[0] == 2


def test_cfi_columns(tmp_path, capsys):
    text = """\
[run]
command = cfi
cutoff = 6
[scenario]
family = mandel
eta = 0.8
r1 = 0.3
r2 = 1.0
[cfi]
phi_start = 0.5
phi_stop = 1.5
num = 3
variants = no_a, all
"""
    code, out, _ = _run(["--config", _write(tmp_path, text)], capsys)
    assert code == 0
    header, rows = _table(out)
    assert header[0] == "phi" and {"i_c_no_a", "i_c_all", "i_q_no_a", "i_q_all", "mzi", "snl", "i_q_ideal"} <= set(header)
    for r in rows:
        assert float(r[header.index("i_c_all")]) <= float(r[header.index("i_q_all")]) + 1e-6


def test_plot_written(tmp_path, capsys):
    out_path = tmp_path / "t.csv"
    text = T_SWEEP.replace("num = 51", "num = 4")
    code, _, err = _run(["--config", _write(tmp_path, text), "--out", str(out_path), "--plot"], capsys)
    assert code == 0
    png = out_path.with_suffix(".png")
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert "plot written" in err


def test_plot_usage_errors(tmp_path, capsys):
    path = _write(tmp_path, LOSSLESS)
    assert _run(["--config", path, "--plot"], capsys)[0] == 1
    assert _run(["--config", path, "--plot", "--out", str(tmp_path / "q.csv")], capsys)[0] == 1
    bad = T_SWEEP.replace("num = 51", "num = 3") + "[plot]\ny = nothing\n"
    code, _, err = _run(["--config", _write(tmp_path, bad), "--plot", "--out", str(tmp_path / "s.csv")], capsys)
    assert code == 1 and "nothing" in err


def test_list_figures(capsys):
    code, out, _ = _run(["--list-figures"], capsys)
    assert code == 0 and out.split() == figure_ids()
