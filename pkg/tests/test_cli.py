import csv
import json

import pytest

from mirrorfhn.cli import SCHEMAS, main, resolve_config, validate_config, ConfigError
from mirrorfhn.model import n0_star, v0_star


def run(tmp_path, command, cfg=None, *flags, name="out"):
    argv = [command, "--out", str(tmp_path / name), *flags]
    if cfg is not None:
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(cfg))
        argv += ["--config", str(path)]
    return main(argv), tmp_path / name


def load(path):
    return json.loads(path.read_text())


def test_simulate_single_spike_and_determinism(tmp_path):
    rc, out = run(tmp_path, "simulate", None, "--seedless", name="a")
    assert rc == 0
    doc = load(out / "events.json")
    assert len(doc["spike_times"]) == 1
    assert [e["kind"] for e in doc["trajectory"]["events"]] == ["spike", "converged"]
    rc, out2 = run(tmp_path, "simulate", None, name="b")
    assert (out / "trajectory.csv").read_bytes() == (out2 / "trajectory.csv").read_bytes()


def test_csv_full_precision(tmp_path):
    _, out = run(tmp_path, "simulate", {"t_end": 5.0})
    rows = list(csv.reader((out / "trajectory.csv").open()))
    assert rows[0] == ["t", "V", "n"]
    assert float(rows[1][1]) == -0.5 and len(rows[-1][1].replace("-", "").replace(".", "")) >= 15


def test_config_errors_exit_2(tmp_path):
    assert run(tmp_path, "simulate", {"protocol": [[0.0, 0.6]]})[0] == 2
    assert run(tmp_path, "simulate", {"protocol": []})[0] == 2
    assert run(tmp_path, "equilibria", {"bogus": 1})[0] == 2
    assert run(tmp_path, "equilibria", {"params": {"epsilon": -0.1}})[0] == 2
    assert run(tmp_path, "equilibria", {"params": {"extra": 1.0}})[0] == 2
    assert run(tmp_path, "classify", {"command": "chart", "v0": 0, "n0": 0})[0] == 2
    assert run(tmp_path, "gspt", {"task": "ic-sweep", "epsilons": [0.01, 0.02]})[0] == 2
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    assert main(["equilibria", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2


def test_integrator_failure_exit_3(tmp_path, monkeypatch):
    from mirrorfhn import cli
    from mirrorfhn.dynamics import IntegrationError

    def boom(*a, **k):
        raise IntegrationError("step-size underflow")

    monkeypatch.setattr(cli, "integrate", boom)
    assert run(tmp_path, "simulate")[0] == 3


def test_outputs_embed_and_revalidate_config(tmp_path):
    rc, out = run(tmp_path, "equilibria", {"params": {"i_app": 0.6}})
    assert rc == 0
    doc = load(out / "equilibria.json")
    assert doc["config"]["params"]["i_app"] == 0.6
    validate_config(doc["config"], doc["schema"])
    assert doc["schema"] == SCHEMAS["equilibria"]
    assert len(doc["equilibria"]) == 3


def test_outputs_stay_in_out_dir(tmp_path):
    rc, out = run(tmp_path, "equilibria")
    assert rc == 0
    assert {p.name for p in tmp_path.iterdir()} == {"out"}
    assert not any(p.name.endswith(".tmp") for p in out.iterdir())


def test_bifdiag_region_iv(tmp_path):
    rc, out = run(tmp_path, "bifdiag", {"cycle_grid": 5}, "--svg")
    assert rc == 0
    kinds = [r["kind"] for r in csv.DictReader((out / "points.csv").open())]
    assert "SN" in kinds and "homoclinic" in kinds
    assert (out / "bifdiag.svg").read_text().startswith("<svg")


def test_bifdiag_absence_reported_in_band(tmp_path):
    cfg = {"params": {"epsilon": 0.02, "i_app": 0.6667, "v0": 0.0, "n0": 0.03}, "i_range": [0.6, 0.7], "cycle_grid": 0}
    rc, out = run(tmp_path, "bifdiag", cfg)
    assert rc == 0
    assert load(out / "bifdiag.json")["findings"]["homoclinic"] == "absent in range"


def test_chart_small(tmp_path):
    rc, out = run(tmp_path, "chart", {"grid": 12, "workers": 2}, "--svg")
    assert rc == 0
    rows = list(csv.DictReader((out / "chart.csv").open()))
    assert len(rows) == 144
    doc = load(out / "chart.json")
    vs = v0_star()
    cell = (2.2 / 12, 3.0 / 12)
    assert abs(doc["pitchfork"][0] - vs) < cell[0] and abs(doc["pitchfork"][1] - n0_star(vs)) < cell[1]
    assert "<rect" in (out / "chart.svg").read_text()


def test_classify_region_i(tmp_path):
    rc, out = run(tmp_path, "classify", {"v0": 0.0, "n0": 0.03})
    doc = load(out / "classify.json")
    assert rc == 0 and doc["region"] == "I" and doc["coherence"]["snic"] is True


def test_gspt_ic_sweep_rows(tmp_path):
    rc, out = run(tmp_path, "gspt", {"task": "ic-sweep"})
    assert rc == 0
    rows = list(csv.DictReader((out / "ic-sweep.csv").open()))
    assert len(rows) == 4
    assert load(out / "gspt.json")["study"]["quantity"] == "I_c"


def test_gspt_absence_in_band(tmp_path):
    rc, out = run(tmp_path, "gspt", {"task": "absence", "v0": 0.0, "n0": 0.03, "epsilons": [0.05]})
    assert rc == 0 and load(out / "gspt.json")["all_absent"] is True


def test_signatures(tmp_path):
    cfg = {"deltas": [1e-3, 1e-2], "i_grid": [0.66, 0.67, 0.7]}
    rc, out = run(tmp_path, "signatures", cfg)
    assert rc == 0
    sig = load(out / "signatures.json")["signatures"]
    assert sig["latency_slope"] < 0 and len(sig["fi_curve"]) == 3


def test_resolve_config_defaults():
    cfg = resolve_config("chart", None)
    assert cfg["grid"] == 120 and cfg["schema_version"] == 1
    with pytest.raises(ConfigError):
        resolve_config("nope", None)
