import json

import pytest

from covert_relay_lab.cli import main, render_csv
from covert_relay_lab.config import ConfigError, load_config, parse_config

POINT = {"params": {"n": 1, "alpha": 0.3, "theta": 1, "p_t_w": 5, "p_j": 1,
                    "sigma_w2_db": -5, "sigma_c2_db": -5, "sigma_b2_db": -5}}


def _write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return str(path)


def test_parse_units():
    cfg = parse_config({"params": {"sigma_w2_w": 0.5, "sigma_c2_db": 0, "sigma_b2_db": -10, "p_t_db": 10}})
    assert cfg.params.sigma_w2 == 0.5
    assert cfg.params.sigma_c2 == pytest.approx(1.0)
    assert cfg.params.sigma_b2 == pytest.approx(0.1)
    assert cfg.params.p_t == pytest.approx(10.0)


@pytest.mark.parametrize("data,where", [
    ({"params": {"sigma_w2": 1}}, "params.sigma_w2"),
    ({"params": {"sigma_w2_db": -5, "sigma_w2_w": 1}}, "params.sigma_w2_w"),
    ({"params": {"bogus": 1}}, "params.bogus"),
    ({"sim": {"trials": 0}}, "sim"),
    ({"sweep": {"variable": "n", "values": [1, 3, 2]}}, "sweep.values"),
    ({"sweep": {"variable": "zzz", "values": [1]}}, "sweep.variable"),
    ({"sweep": {"variable": "n", "values": [1, 0]}}, "sweep.values[1]"),
    ({"epsilon_c": [0.1, 1.5]}, "epsilon_c"),
])
def test_config_errors_name_the_field(data, where):
    with pytest.raises(ConfigError) as err:
        parse_config(data)
    assert err.value.where.startswith(where)


def test_json_syntax_error_has_line(tmp_path):
    path = _write(tmp_path, '{"params": {\n  "n": 3\n  "alpha": 0.3}}')
    with pytest.raises(ConfigError) as err:
        load_config(path)
    assert ":3:" in err.value.where


def test_metrics_example(tmp_path, capsys):
    assert main(["metrics", "--config", _write(tmp_path, POINT)]) == 0
    out = dict(line.split() for line in capsys.readouterr().out.strip().splitlines())
    assert float(out["outage_rrs"]) == pytest.approx(0.118818, abs=1e-6)


def test_simulate_trials_zero_fails(tmp_path, capsys):
    assert main(["simulate", "--config", _write(tmp_path, {"sim": {"trials": 0}})]) == 1
    assert "trials" in capsys.readouterr().err
    assert main(["simulate", "--trials", "0"]) == 1
    assert "--trials" in capsys.readouterr().err


def test_missing_config_is_validation_error(tmp_path, capsys):
    assert main(["metrics", "--config", str(tmp_path / "nope.json")]) == 1


def test_simulate_csv(tmp_path):
    cfg = {**POINT, "params": {**POINT["params"], "n": 4}, "sim": {"trials": 2000, "seed": 3},
           "sweep": {"variable": "alpha", "values": [0.3, 0.5]}, "lambda": [1.0, 4.0]}
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--config", _write(tmp_path, cfg), "--out", str(out), "--no-timestamp"]) == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0].startswith("sweep_variable,sweep_value,scheme,metric")
    # 2 sweep points x 2 schemes x (5 metrics + 2 lambdas x 3)
    assert len(lines) - 1 == 2 * 2 * 11
    for line in lines[1:]:
        cols = line.split(",")
        if cols[3] not in ("expected_min_rate", "expected_min_rate_conditional", "zeta"):
            assert 0 <= float(cols[5]) <= 1


def test_optimize_writes_result_and_trace(tmp_path):
    cfg = {"sim": {"trials": 3000, "seed": 2}, "epsilon_c": [0.2, 0.4], "grid_size": 12}
    out = tmp_path / "opt.csv"
    assert main(["optimize", "--config", _write(tmp_path, cfg), "--out", str(out), "--no-timestamp"]) == 0
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert len(rows) == 1 + 4
    assert (tmp_path / "opt_trace.csv").exists()


@pytest.mark.parametrize("command", [
    ["simulate"],
    ["optimize"],
    ["reproduce", "fig3"],
])
def test_byte_identical_across_workers(tmp_path, command):
    cfg = _write(tmp_path, {"sim": {"trials": 3000, "seed": 9, "chunk_size": 700}, "lambda": [2.0],
                            "epsilon_c": [0.3], "grid_size": 10})
    outs = []
    for w in ("1", "3"):
        out = tmp_path / f"w{w}" / "out.csv"
        assert main([*command, "--config", cfg, "--out", str(out), "--workers", w, "--no-timestamp"]) == 0
        outs.append(sorted((p.name, p.read_bytes()) for p in out.parent.iterdir()))
    assert outs[0] == outs[1]


def test_timestamp_flag():
    assert "# generated" in render_csv(["a"], [[1]])
    assert "# generated" not in render_csv(["a"], [[1]], timestamp=False)


def test_reproduce_fig2_columns_agree(tmp_path):
    assert main(["reproduce", "fig2", "--trials", "20000", "--out", str(tmp_path), "--no-timestamp"]) == 0
    text = (tmp_path / "fig2_rrs_alpha0.3.csv").read_text().splitlines()
    rows = [l.split(",") for l in text if not l.startswith("#")]
    head = rows[0]
    assert head[:2] == ["n", "alpha"] and "p_to_analytic" in head and "p_to_mc" in head and "ci" in head
    i_a, i_m, i_c = head.index("p_to_analytic"), head.index("p_to_mc"), head.index("ci")
    for r in rows[1:]:
        se = float(r[i_c]) / 1.96
        assert abs(float(r[i_a]) - float(r[i_m])) <= 3 * se + 1e-12
