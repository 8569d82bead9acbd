import json

import pytest
import yaml

from magsob.cli import (DEFAULTS, EXIT_ERROR, EXIT_OK, EXIT_VALIDATION, execute, load_config,
                        main, rerun, resolve, validate)

HARDY = {"command": "hardy", "seed": 0, "sweep": {"flux": [0.3], "m_range": [-2, 2]}}
GAUGE = {"command": "gauge-check", "seed": 3, "gauge": {"fields": 3, "n": 16}}
SWEEP = {"command": "bubble-sweep", "seed": 0,
         "sweep": {"k": [2], "m": [0], "R": [25.0, 50.0], "quantities": ["alpha"]}}
MINIMIZE = {"command": "minimize", "seed": 0, "sector": {"kind": "radial"},
            "electric": {"a": -1.0}, "grid": {"n": [100, 200]}}


def fields(cfg):
    return {f.field for f in validate(cfg) if f.level == "error"}


def write_yaml(tmp_path, doc, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return path


def test_hardy_run(tmp_path):
    assert execute(resolve(HARDY), tmp_path) == EXIT_OK
    res = json.loads((tmp_path / "hardy.json").read_text())
    item = res["result"]["results"][0]
    assert item["hardy_constant"] == pytest.approx(0.09, abs=1e-15)
    assert item["max_deviation"] < 1e-8
    assert res["manifest"] == "manifest.json"
    lines = (tmp_path / "hardy.csv").read_text().splitlines()
    assert lines[0] == "# manifest=manifest.json"
    assert lines[1] == "flux,m,closed_form,discrete,deviation"
    assert len(lines) == 2 + 5


def test_manifest_contents(tmp_path):
    execute(resolve(GAUGE), tmp_path)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert set(man["artifacts"]) == {"gauge_check.json", "gauge_check.csv"}
    assert man["config"]["seed"] == 3 and man["exit_code"] == EXIT_OK
    assert man["grids"] == [{"dimension_N": 4, "r_max": 6.0, "n": 16}]
    assert "version" in man and man["runtime_seconds"] >= 0


def test_json_only_format(tmp_path):
    assert execute(resolve(HARDY, fmt="json"), tmp_path) == EXIT_OK
    assert not (tmp_path / "hardy.csv").exists()


def test_minimize_writes_field(tmp_path):
    cfg = resolve(dict(MINIMIZE, sector={"kind": "biradial", "m": 0},
                       grid={"n": [25, 33], "r_max": 20.0}, electric={"a": -0.5}))
    assert execute(cfg, tmp_path) == EXIT_OK
    assert (tmp_path / "field.csv").exists()
    log = (tmp_path / "minimize_log.csv").read_text().splitlines()
    assert log[0] == "iteration,quotient,residual,step" and len(log) > 2
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert {"minimize_log.csv", "field.csv"} <= set(man["artifacts"])
    res = json.loads((tmp_path / "minimize.json").read_text())["result"]
    assert len(res["levels"]) == 2 and "el_residual" in res["levels"][-1]


def test_defaults_pass_validation():
    for cmd in ("hardy", "bubble-sweep", "minimize", "chain", "gauge-check"):
        assert fields(resolve({}, cmd)) == set()


@pytest.mark.parametrize("doc, field", [
    ({"command": "nope"}, "command"),
    ({"command": "hardy", "bogus": 1}, "bogus"),
    ({"command": "hardy", "seed": -1}, "seed"),
    ({"command": "hardy", "seed": None}, "seed"),
    ({"command": "minimize", "electric": {"a": 2.0}}, "electric.a"),
    ({"command": "minimize", "potential": {"type": "aharonov_bohm", "flux_alpha": 0.5},
      "electric": {"a": 0.3}, "sector": {"kind": "biradial", "m": 0}}, "electric.a"),
    ({"command": "minimize", "sector": {"kind": "zk"}}, "sector.kind"),
    ({"command": "minimize", "grid": {"n": [4]}}, "grid.n"),
    ({"command": "bubble-sweep", "sweep": {"R": []}}, "sweep.R"),
    ({"command": "bubble-sweep", "sweep": {"R": [50.0]}}, "sweep.R"),
    ({"command": "bubble-sweep", "sweep": {"quantities": ["omega"]}}, "sweep.quantities"),
    ({"command": "bubble-sweep", "potential": {"type": "aharonov_bohm", "flux_alpha": 0.5}},
     "sweep.cutoff"),
    ({"command": "bubble-sweep", "dimension_N": 3}, "dimension_N"),
    ({"command": "chain", "chain": {"R": []}}, "chain.R"),
    ({"command": "chain", "chain": {"a": 0.5}}, "chain.a"),
    ({"command": "gauge-check", "gauge": {"n": 4}}, "gauge.n"),
    ({"command": "hardy", "sweep": {"widths": [2.0, 1.0]}}, "sweep.widths"),
])
def test_validation_findings(doc, field):
    assert field in fields(resolve(doc))


def test_positivity_allows_hardy_margin():
    doc = {"command": "minimize", "potential": {"type": "aharonov_bohm", "flux_alpha": 0.5},
           "electric": {"a": 0.2}, "sector": {"kind": "biradial", "m": 0}}
    assert fields(resolve(doc)) == set()


def test_validation_failure_exit_code(tmp_path):
    assert execute(resolve({"command": "gauge-check", "gauge": {"n": 4}}), tmp_path) == \
        EXIT_VALIDATION
    assert not (tmp_path / "manifest.json").exists()


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert execute(resolve(HARDY), blocker / "sub") == EXIT_VALIDATION


def test_resolve_precedence():
    cfg = resolve({"seed": 5, "sweep": {"flux": [0.1]}}, "hardy", seed=7, fmt="csv")
    assert cfg["seed"] == 7 and cfg["format"] == "csv" and cfg["command"] == "hardy"
    assert cfg["sweep"]["flux"] == [0.1] and cfg["sweep"]["m_range"] == DEFAULTS["sweep"]["m_range"]
    assert DEFAULTS["seed"] == 0


def test_load_config_reads_manifest(tmp_path):
    execute(resolve(HARDY), tmp_path)
    assert load_config(tmp_path / "manifest.json")["command"] == "hardy"
    bad = tmp_path / "bad.yaml"
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(ValueError):
        load_config(bad)


@pytest.mark.parametrize("doc", [HARDY, GAUGE, SWEEP, MINIMIZE])
def test_rerun_is_byte_identical(tmp_path, doc):
    assert execute(resolve(doc), tmp_path / "a") == EXIT_OK
    code, same = rerun(tmp_path / "a" / "manifest.json", tmp_path / "b")
    assert code == EXIT_OK and same and all(same.values())


def test_rerun_detects_changes(tmp_path):
    execute(resolve(HARDY), tmp_path / "a")
    path = tmp_path / "a" / "manifest.json"
    man = json.loads(path.read_text())
    man["artifacts"]["hardy.json"] = "0" * 64
    path.write_text(json.dumps(man))
    assert main(["rerun", str(path), "--out", str(tmp_path / "b")]) == EXIT_ERROR


def test_main_subcommands(tmp_path, capsys):
    cfg = write_yaml(tmp_path, HARDY)
    assert main(["validate", "--config", str(cfg)]) == EXIT_OK
    assert "ok" in capsys.readouterr().out
    assert main(["hardy", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "r")]) == EXIT_OK
    assert main(["gauge-check", "--config", str(cfg), "--out", str(tmp_path / "x")]) == \
        EXIT_VALIDATION
    assert main(["validate", "--config", str(tmp_path / "missing.yaml")]) == EXIT_VALIDATION
    bad = write_yaml(tmp_path, {"command": "hardy", "seed": -2}, "bad.yaml")
    assert main(["validate", "--config", str(bad)]) == EXIT_VALIDATION
    assert "seed" in capsys.readouterr().out
    assert main(["rerun", str(tmp_path / "nothing.json")]) == EXIT_VALIDATION
    with pytest.raises(SystemExit):
        main(["frobnicate"])
