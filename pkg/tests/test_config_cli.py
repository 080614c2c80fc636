import csv
import json
import math

import numpy as np
import pytest

from muskat.cli import main, sweep
from muskat.config import config_from_dict, expand_dotted, parse_config
from muskat.grid import ConfigurationError, GridFunction, make_grid, read_csv, write_csv

MINIMAL = {"grid.N": 512, "grid.L": math.pi, "init.family": "sine", "init.a": 0.01, "t_end": 10}
SMALL = {"grid": {"N": 32, "L": math.pi}, "init": {"family": "sine", "a": 0.01, "k": 1}, "t_end": 0.2, "cfl_safety": 0.5}


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def test_minimal_config_gets_defaults():
    cfg = config_from_dict(MINIMAL)
    assert cfg.sim.cfl_safety == 0.1
    assert cfg.sim.quadrature.truncation_radius == pytest.approx(8 * math.pi)
    assert cfg.sim.quadrature.alpha_spacing == pytest.approx(2 * math.pi / 512)
    assert cfg.sim.N == 512 and cfg.sim.t_end == 10


def test_dotted_keys_expand():
    assert expand_dotted({"grid.N": 8, "grid": {"L": 1}}) == {"grid": {"N": 8, "L": 1}}


def test_unknown_key_is_named(tmp_path):
    with pytest.raises(ConfigurationError, match="gridd"):
        parse_config(_write(tmp_path, {**SMALL, "gridd": 1}))


def test_schema_error_names_the_path(tmp_path):
    with pytest.raises(ConfigurationError, match="grid/N"):
        parse_config(_write(tmp_path, {**SMALL, "grid": {"N": "big", "L": 1.0}}))
    with pytest.raises(ConfigurationError):
        parse_config(_write(tmp_path, {**SMALL, "grid": {"N": 12, "L": 1.0}}))


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        parse_config("/nonexistent/cfg.json")


def test_effective_config_round_trips(tmp_path):
    cfg = config_from_dict(SMALL)
    again = parse_config(_write(tmp_path, cfg.to_dict()))
    assert again.to_dict() == cfg.to_dict()
    assert again.sim == cfg.sim


def test_simulate_writes_outputs(tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(_write(tmp_path, SMALL)), "--out", str(out)]) == 0
    with open(out / "series.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "sup_f", "B", "M_2", "M_inf", "hhalf", "envelope", "ledger_slack_p2"]
    assert float(rows[-1][0]) == pytest.approx(0.2)
    assert json.loads((out / "events.json").read_text()) == []
    final = read_csv(out / "final.csv")
    assert final.grid == make_grid(math.pi, 32)
    assert json.loads((out / "config.json").read_text())["cfl_safety"] == 0.5


def test_zero_data_gives_zero_series(tmp_path):
    doc = {**SMALL, "init": {"family": "constant", "c": 0.0}}
    out = tmp_path / "zero"
    assert main(["simulate", "--config", str(_write(tmp_path, doc)), "--out", str(out)]) == 0
    data = np.loadtxt(out / "series.csv", delimiter=",", skiprows=1)
    assert np.all(data[:, 1:] == 0.0)


def test_nan_injection_exits_two(tmp_path):
    doc = {**SMALL, "debug": {"inject_nan_step": 2}}
    out = tmp_path / "nan"
    assert main(["simulate", "--config", str(_write(tmp_path, doc)), "--out", str(out)]) == 2
    events = json.loads((out / "events.json").read_text())
    assert [e["kind"] for e in events] == ["nan_detected"]


def test_slope_halt_exits_two(tmp_path):
    doc = {**SMALL, "init": {"family": "sine", "a": 2.0}, "slope_threshold": 1.0}
    assert main(["simulate", "--config", str(_write(tmp_path, doc)), "--out", str(tmp_path / "h")]) == 2


def test_config_and_io_errors_exit_one(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 1
    assert main(["simulate", "--config", str(_write(tmp_path, {**SMALL, "gridd": 1}))]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["simulate", "--config", str(bad)]) == 1
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["simulate", "--config", str(_write(tmp_path, SMALL)), "--out", str(blocker / "sub")]) == 1


def test_rerun_is_byte_identical(tmp_path):
    cfg = str(_write(tmp_path, SMALL))
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "b")])
    for name in ("series.csv", "final.csv", "events.json", "config.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.mark.parametrize("suite", ["operators", "bounds", "theorems"])
def test_verify_suites_pass(tmp_path, suite):
    doc = {**SMALL, "grid": {"N": 64, "L": math.pi}, "verify": {"random_profiles": 2}}
    out = tmp_path / suite
    assert main(["verify", "--suite", suite, "--config", str(_write(tmp_path, doc)), "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["pass"] is True and rep["suite"] == suite
    assert all(set(c) >= {"name", "pass", "worst_margin", "worst_location", "tolerance"} for c in rep["checks"])


def test_verify_with_inflated_bounds_fails(tmp_path):
    doc = {**SMALL, "grid": {"N": 64, "L": math.pi}, "verify": {"random_profiles": 1}, "debug": {"bound_scale": 10}}
    out = tmp_path / "x10"
    assert main(["verify", "--suite", "bounds", "--config", str(_write(tmp_path, doc)), "--out", str(out)]) != 0
    rep = json.loads((out / "report.json").read_text())
    failing = [c for c in rep["checks"] if not c["pass"] and not c.get("skipped")]
    assert failing and all(c["worst_margin"] < 0 for c in failing)


def test_verify_unknown_suite(tmp_path):
    assert main(["verify", "--suite", "everything", "--out", str(tmp_path)]) == 1


@pytest.fixture
def cos_csv(tmp_path):
    grid = make_grid(math.pi, 64)
    p = tmp_path / "cos.csv"
    write_csv(GridFunction(grid, np.cos(grid.nodes)), p)
    return p


def test_op_lambda_on_cosine(tmp_path, cos_csv):
    out = tmp_path / "lam.csv"
    assert main(["op", "--name", "lambda", "--in", str(cos_csv), "--out", str(out)]) == 0
    g = read_csv(out)
    assert np.max(np.abs(g.values - math.pi * np.cos(g.grid.nodes))) < 1e-12


@pytest.mark.parametrize("name", ["velocity", "rhs"])
def test_op_on_constant_is_zero(tmp_path, name):
    p = tmp_path / "c.csv"
    write_csv(GridFunction(make_grid(math.pi, 32), np.full(32, 0.4)), p)
    out = tmp_path / "o.csv"
    assert main(["op", "--name", name, "--in", str(p), "--out", str(out)]) == 0
    assert np.all(read_csv(out).values == 0.0)


def test_op_errors(tmp_path, cos_csv):
    out = str(tmp_path / "o.csv")
    assert main(["op", "--name", "nope", "--in", str(cos_csv), "--out", out]) == 1
    assert main(["op", "--name", "Df", "--in", str(cos_csv), "--out", out]) == 1
    other = tmp_path / "o32.csv"
    write_csv(GridFunction(make_grid(math.pi, 32), np.zeros(32)), other)
    assert main(["op", "--name", "Lf", "--in", str(cos_csv), "--in2", str(other), "--out", out]) == 1
    assert main(["op", "--name", "Dp", "--in", str(cos_csv), "--in2", str(cos_csv), "--out", out]) == 1


@pytest.mark.parametrize(
    "name, extra",
    [("tterms", []), ("tterms", ["--component", "T5"]), ("Dp", ["--p", "1.5", "--in2"]), ("hilbert", [])],
)
def test_op_other_operators_run(tmp_path, cos_csv, name, extra):
    if extra and extra[-1] == "--in2":
        extra = extra + [str(cos_csv)]
    args = ["op", "--name", name, "--in", str(cos_csv), "--out", str(tmp_path / "o.csv"), *extra]
    assert main(args) == 0
    assert read_csv(tmp_path / "o.csv").grid == make_grid(math.pi, 64)


def test_one_point_sweep_matches_simulate(tmp_path):
    cfg = str(_write(tmp_path, SMALL))
    main(["simulate", "--config", cfg, "--out", str(tmp_path / "sim")])
    assert main(["sweep", "--config", cfg, "--grid", '{"init.a": [0.01]}', "--out", str(tmp_path / "sw")]) == 0
    assert (tmp_path / "sim" / "series.csv").read_bytes() == (tmp_path / "sw" / "run_000" / "series.csv").read_bytes()
    with open(tmp_path / "sw" / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1 and rows[0]["status"] == "ok"


def test_amplitude_sweep_orders_final_curvature(tmp_path, monkeypatch):
    monkeypatch.setenv("MUSKAT_THREADS", "1")
    rows = sweep(SMALL, {"init.a": [0.005, 0.01, 0.02]}, tmp_path)
    m = [r["final_M_inf"] for r in rows]
    assert m[0] < m[1] < m[2]


def test_sweep_records_failures_and_continues(tmp_path, monkeypatch):
    monkeypatch.setenv("MUSKAT_THREADS", "1")
    rows = sweep(SMALL, {"init.k": [1, 0.5]}, tmp_path)
    assert rows[0]["status"] == "ok"
    assert rows[1]["status"].startswith("error")


def test_empty_sweep_grid_is_an_error(tmp_path):
    cfg = str(_write(tmp_path, SMALL))
    assert main(["sweep", "--config", cfg, "--grid", "{}", "--out", str(tmp_path / "e")]) == 1
    assert main(["sweep", "--config", cfg, "--grid", '{"init.a": []}', "--out", str(tmp_path / "e")]) == 1
    with pytest.raises(ConfigurationError):
        sweep(SMALL, {}, tmp_path)


def test_sweep_grid_from_file(tmp_path):
    cfg = str(_write(tmp_path, SMALL))
    grid = _write(tmp_path, {"init.a": [0.01, 0.02], "cfl_safety": [0.5]}, "grid.json")
    assert main(["sweep", "--config", cfg, "--grid", str(grid), "--out", str(tmp_path / "sw")]) == 0
    assert sorted(p.name for p in (tmp_path / "sw").iterdir()) == ["run_000", "run_001", "sweep.csv"]
