import csv
import json

import pytest

from bjj_control.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, ROBUSTNESS_COLUMNS, main
from bjj_control.sweep import load


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_constant_is_flat(tmp_path):
    out = tmp_path / "traj.csv"
    code = main(["simulate", "--n", "10", "--lambda-final", "0", "--tf-over-tr", "0.2",
                 "--scheme", "constant", "--out", str(out)])
    assert code == EXIT_OK
    rows = read_csv(out)
    assert list(rows[0]) == ["t_over_tr", "lambda", "fidelity", "xi_n_sq", "xi_s_db", "alpha"]
    assert all(float(r["lambda"]) == 0.0 for r in rows)
    assert all(abs(float(r["fidelity"]) - 1) <= 1e-8 for r in rows)
    assert float(rows[-1]["t_over_tr"]) == pytest.approx(0.2)


def test_simulate_esta_beats_sta(tmp_path):
    finals = {}
    for scheme in ("sta", "esta_h2_nu5"):
        out = tmp_path / f"{scheme}.csv"
        assert main(["simulate", "--n", "10", "--tf-over-tr", "0.1", "--scheme", scheme,
                     "--out", str(out)]) == EXIT_OK
        finals[scheme] = float(read_csv(out)[-1]["fidelity"])
    assert finals["esta_h2_nu5"] > finals["sta"]


def test_config_file_and_override_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"n_particles": 4, "tf_over_tr": 0.05, "lambda_final": 3.0,
                               "scheme": "adiabatic", "samples": 10}))
    out = tmp_path / "t.csv"
    assert main(["simulate", "--config", str(cfg), "--tf-over-tr", "0.1", "--out", str(out)]) == EXIT_OK
    rows = read_csv(out)
    assert float(rows[-1]["t_over_tr"]) == pytest.approx(0.1)
    assert float(rows[-1]["lambda"]) == pytest.approx(3.0)


def test_nu_override_selects_variant(tmp_path):
    from bjj_control.cli import build_spec, make_parser
    args = make_parser().parse_args(["simulate", "--scheme", "esta_h2_nu5", "--nu", "1"])
    assert build_spec(args).scheme() == "esta_h2_nu1"


def test_missing_config_file(tmp_path, capsys):
    out = tmp_path / "never.csv"
    code = main(["simulate", "--config", str(tmp_path / "nope.json"), "--out", str(out)])
    assert code == EXIT_CONFIG
    assert not out.exists()
    assert "not found" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["simulate", "--n", "7"],
    ["simulate", "--tf-over-tr", "-1"],
    ["simulate", "--lambda-final", "-3"],
    ["simulate", "--scheme", "fast"],
    ["simulate", "--steps", "0"],
])
def test_invalid_overrides_exit_with_config_code(tmp_path, argv):
    out = tmp_path / "x.csv"
    assert main(argv + ["--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()
    assert list(tmp_path.iterdir()) == []


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    import bjj_control.cli as cli
    from bjj_control import ConvergenceError

    def fail(*args, **kwargs):
        raise ConvergenceError("no step-size convergence")

    monkeypatch.setattr(cli, "trajectory_rows", fail)
    out = tmp_path / "x.csv"
    assert main(["simulate", "--n", "10", "--out", str(out)]) == EXIT_NUMERICAL
    assert not out.exists()


def test_sweep_writes_loadable_table(tmp_path):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({"n_list": [4], "tf_grid": [0.1, 0.2],
                               "schemes": ["adiabatic", "sta"], "robustness": False}))
    for suffix in (".json", ".csv"):
        out = tmp_path / f"table{suffix}"
        assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        table = load(out)
        assert [(r.scheme, r.tf_over_tr) for r in table.rows] == [
            ("adiabatic", 0.1), ("adiabatic", 0.2), ("sta", 0.1), ("sta", 0.2)]


def test_robustness_schema_single_and_grid(tmp_path):
    single = tmp_path / "one.csv"
    grid = tmp_path / "grid.csv"
    assert main(["robustness", "--n", "4", "--lambda-final", "0", "--tf-over-tr", "0.5",
                 "--scheme", "constant", "--out", str(single)]) == EXIT_OK
    cfg = tmp_path / "g.json"
    cfg.write_text(json.dumps({"n_list": [4], "tf_grid": [0.5, 1.0], "lambda_final": 0.0,
                               "schemes": ["constant"]}))
    assert main(["robustness", "--config", str(cfg), "--out", str(grid)]) == EXIT_OK
    one, many = read_csv(single), read_csv(grid)
    assert list(one[0]) == list(many[0]) == list(ROBUSTNESS_COLUMNS)
    assert len(one) == 1 and len(many) == 2
    for row in one + many:
        assert float(row["s_m"]) <= 1e-6 and float(row["s_t"]) <= 1e-6


def test_emit_plot_data_figure2(tmp_path):
    cfg = tmp_path / "f.json"
    cfg.write_text(json.dumps({"n_particles": 4, "tf_over_tr": 0.1, "samples": 5,
                               "schemes": ["adiabatic", "sta"]}))
    out = tmp_path / "fig2.csv"
    assert main(["emit-plot-data", "--figure", "2", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    rows = read_csv(out)
    assert {r["scheme"] for r in rows} == {"adiabatic", "sta"}


def test_floats_are_full_precision(tmp_path):
    out = tmp_path / "t.csv"
    main(["simulate", "--n", "4", "--tf-over-tr", "0.1", "--scheme", "sta", "--out", str(out)])
    value = read_csv(out)[3]["fidelity"]
    assert float(format(float(value), ".17g")) == float(value)
    assert len(value.replace("0.", "").lstrip("0")) >= 15
