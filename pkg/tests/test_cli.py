import csv
import io
import json
import math

import pytest

from gatebudget import analytic as an
from gatebudget.cli import budget_rows, cmd_budget, main
from gatebudget.config import bundled_config, load_json, parse_budget, parse_sweep
from gatebudget.errors import ConfigError
from gatebudget.harness import InfidelityRecord

HEADER = "strength,analytic,numeric,ratio,n_or_nbar,channel,normalized_analytic,normalized_numeric"


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if isinstance(doc, dict) else doc)
    return p


def _sweep_doc(**over):
    doc = {
        "schema": "gatebudget.sweep/1",
        "state_2q": "plus",
        "motional": {"kind": "fixed", "n": 0},
        "channels": [{"name": "motional_shift_2q", "strengths": [0.01, 0.02]}],
    }
    doc.update(over)
    return doc


def test_sweep_writes_csv(tmp_path):
    cfg = _write(tmp_path, _sweep_doc())
    out = tmp_path / "out.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    raw = out.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == HEADER
    assert len(lines) == 3
    row = lines[1].split(",")
    assert row[5] == "motional_shift_2q"
    assert float(row[0]) == 0.01
    assert abs(float(row[3]) - 1) < 0.05


def test_sweep_bytes_identical(tmp_path):
    cfg = _write(tmp_path, _sweep_doc())
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["sweep", "--config", str(cfg), "--out", str(a)])
    main(["sweep", "--config", str(cfg), "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_seventeen_digits(tmp_path):
    cfg = _write(tmp_path, _sweep_doc())
    out = tmp_path / "o.csv"
    main(["sweep", "--config", str(cfg), "--out", str(out)])
    rows = list(csv.reader(io.StringIO(out.read_text())))[1:]
    for r in rows:
        assert float(r[2]) == float(format(float(r[2]), ".17g"))
        assert len(r[1].replace(".", "").replace("-", "").split("e")[0].lstrip("0")) >= 15


def test_malformed_config_exit_2_and_no_output(tmp_path, capsys):
    cfg = _write(tmp_path, '{"schema": "gatebudget.sweep/1",\n "channels": [\n')
    out = tmp_path / "out.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()
    assert "line 3" in capsys.readouterr().err
    assert list(tmp_path.iterdir()) == [cfg]


@pytest.mark.parametrize(
    "patch,field",
    [
        ({"schema": "other/1"}, "$.schema"),
        ({"channels": [{"name": "warp_drive", "strengths": [0.1]}]}, "$.channels[0].name"),
        ({"channels": [{"name": "heating_2q", "strengths": [0.1, -1]}]}, "$.channels[0].strengths[1]"),
        ({"motional": {"kind": "thermal", "nbar": -2}}, "$.motional.nbar"),
        ({"state_2q": [0, 0, 0, 0]}, "$.state_2q"),
        ({"gate_2q": {"loops": 0}}, "$.gate_2q.loops"),
        ({"surprise": 1}, "$"),
    ],
)
def test_field_diagnostics(patch, field):
    with pytest.raises(ConfigError) as info:
        parse_sweep(load_json(json.dumps(_sweep_doc(**patch))))
    assert str(info.value).startswith(field)


def test_missing_config_exit_2(tmp_path):
    assert main(["sweep", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o.csv")]) == 2


def test_bad_arguments_exit_2():
    assert main(["sweep"]) == 2
    assert main(["validate", "--tier", "slow"]) == 2


def test_all_channels_zero_strength(tmp_path):
    cfg = _write(tmp_path, _sweep_doc())
    out = tmp_path / "z.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out), "--channels", "all", "--strengths", "0"]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 9
    for r in rows:
        assert float(r["analytic"]) == 0
        assert float(r["numeric"]) < 1e-10


def test_channel_subset_override(tmp_path):
    doc = parse_sweep(_sweep_doc(), ["heating_2q"], [0.001])
    assert [p.channel.name for p in doc.plans] == ["heating_2q"]
    assert doc.plans[0].sweep_values == (0.001,)


def test_bundled_heating_config(tmp_path):
    out = tmp_path / "heat.csv"
    svg = tmp_path / "heat.svg"
    assert main(["sweep", "--config", str(bundled_config("heating_sweep_2q.json")), "--out", str(out), "--svg", str(svg)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    ratios = [float(r["ratio"]) for r in rows]
    assert abs(ratios[0] - 1) < 0.01
    assert [abs(r - 1) for r in ratios] == sorted(abs(r - 1) for r in ratios)
    text = svg.read_text()
    assert text.lstrip().startswith("<?xml") and "<svg" in text and "href=\"http" not in text


@pytest.mark.parametrize(
    "name",
    [
        "heating_sweep_2q.json",
        "dephasing_sweep_2q.json",
        "inhomo1_sweep_1q.json",
        "inhomo2_sweep_1q.json",
        "cross_kerr_sweep_1q.json",
        "coherent_sweep_2q.json",
        "walsh_sweep_2q.json",
    ],
)
def test_bundled_sweep_configs_parse(name):
    cfg = parse_sweep(load_json(bundled_config(name)))
    assert cfg.plans and cfg.description


def test_budget_all_zero():
    rows = budget_rows({"schema": "gatebudget.budget/1"})
    assert len(rows) == 10
    assert all(r[2] == 0 for r in rows)
    assert rows[-1][0] == "total"


def test_budget_single_heating_term():
    rows = budget_rows({"schema": "gatebudget.budget/1", "channels": {"heating_2q": {"ndot": 1e-3}}})
    assert rows[-1][2] == an.infid_2q_heating(1e-3, 1.0, 1, 2.0)
    heat = next(r for r in rows if r[0] == "heating_2q")
    assert heat[3] == 100.0


def test_budget_total_is_sum_and_flags():
    doc = load_json(bundled_config("budget_example.json"))
    doc["channels"]["motional_shift_2q"]["delta"] = 0.5
    rows = budget_rows(doc)
    assert rows[-1][2] == math.fsum(r[2] for r in rows[:-1])
    shift = next(r for r in rows if r[0] == "motional_shift_2q")
    assert shift[4] == "nonperturbative"
    assert sum(r[3] for r in rows[:-1]) == pytest.approx(100.0)


def test_budget_cli_outputs(tmp_path):
    out = tmp_path / "budget.csv"
    buf = io.StringIO()
    assert cmd_budget(bundled_config("budget_example.json"), out, buf) == 0
    assert "total" in buf.getvalue()
    lines = out.read_text().splitlines()
    assert lines[0] == "channel,formula,infidelity,percent,flag"
    assert len(lines) == 11


def test_budget_rejects_unknown_channel():
    with pytest.raises(ConfigError):
        parse_budget({"schema": "gatebudget.budget/1", "channels": {"gremlins": {}}})
    with pytest.raises(ConfigError):
        parse_budget({"schema": "gatebudget.budget/1", "channels": {"heating_2q": {"ndot": -1}}})


def test_csv_header_constant():
    assert ",".join(InfidelityRecord.CSV_HEADER) == HEADER


def test_bad_thread_env_is_config_error(tmp_path, monkeypatch):
    monkeypatch.setenv("GATEBUDGET_THREADS", "many")
    cfg = _write(tmp_path, _sweep_doc())
    out = tmp_path / "o.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()
