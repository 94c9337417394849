import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from tvlab.cli import ConfigError, config_hash, main, validate_config
from tvlab.grid import read_field, write_field


def _config(tmp_path, **solver):
    cfg = {
        "seed": 3,
        "grid": {"dim": 2, "h": 1 / 32, "box": [[-0.5, 0.5], [-0.5, 0.5]]},
        "initial": {"bumps": {"count": 3}},
        "solver": {"steps": 16, **solver},
    }
    p = tmp_path / "run.json"
    p.write_text(json.dumps(cfg))
    return p, cfg


@pytest.fixture(scope="module")
def simulated(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    p, _ = _config(d)
    assert main(["simulate", "--config", str(p), "--out", str(d / "out")]) == 0
    return d / "out"


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


# --- configuration -------------------------------------------------------------------


def test_validate_config_lists_every_violation():
    bad = {"grid": {"dim": 4, "h": 0, "box": [[0, 1]]}, "initial": {}, "solver": {"steps": 0}, "extra": 1}
    with pytest.raises(ConfigError) as exc:
        validate_config(bad)
    msg = str(exc.value)
    for path in ("grid.dim", "grid.h", "solver.steps", "<root>", "initial"):
        assert path in msg


def test_semantic_config_checks():
    cfg = {"grid": {"dim": 2, "h": 0.1, "box": [[0, 1]]}, "initial": {"bumps": {}}, "solver": {"steps": 1}}
    with pytest.raises(ConfigError, match="expected 2 intervals") as exc:
        validate_config(cfg)
    assert "seed: required" in str(exc.value)
    cfg = {"grid": {"dim": 1, "h": 0.1, "box": [[1, 0]]}, "initial": {"example": "step"}, "solver": {"steps": 1}}
    with pytest.raises(ConfigError, match="upper end"):
        validate_config(cfg)


def test_config_hash_ignores_key_order():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})


# --- simulate ----------------------------------------------------------------------------


def test_simulate_writes_field_dual_and_manifest(simulated):
    f = read_field(simulated / "field.tvf")
    assert f.data.shape == (17, 32, 32)
    man = json.loads((simulated / "manifest.json").read_text())
    assert man["verdict"] == "pass" and len(man["steps"]) == 16
    assert set(man["outputs"]) == {"field.tvf", "dual.tvz"}
    assert man["dual_sup_norm"] <= 1 + 1e-6
    assert {"tvlab", "numpy", "scipy"} <= set(man["versions"])


def test_simulate_is_deterministic(tmp_path, simulated):
    p, _ = _config(tmp_path)
    assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "again")]) == 0
    for name in ("field.tvf", "dual.tvz"):
        assert (tmp_path / "again" / name).read_bytes() == (simulated / name).read_bytes()


def test_simulate_rejects_invalid_config(tmp_path, capsys):
    p, _ = _config(tmp_path)
    cfg = json.loads(p.read_text())
    cfg["solver"]["steps"] = 0
    p.write_text(json.dumps(cfg))
    assert main(["simulate", "--config", str(p)]) == 1
    assert "solver.steps: 0 is less than the minimum of 1" in capsys.readouterr().err


def test_simulate_example_dimension_mismatch(tmp_path, capsys):
    cfg = {"grid": {"dim": 2, "h": 0.125, "box": [[-1, 1], [-1, 1]]}, "initial": {"example": "F"},
           "solver": {"steps": 1}}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    assert main(["simulate", "--config", str(p)]) == 1
    assert "3-dimensional" in capsys.readouterr().err


# --- example / tv / indicator ----------------------------------------------------------------


def test_example_then_tv(tmp_path, capsys):
    out = tmp_path / "step.tvf"
    assert main(["example", "step", "--box=-0.5,0.5", "--h", "0.015625", "--times", "0", "--out", str(out)]) == 0
    assert main(["tv", "--field", str(out), "--point", "0,0,0", "--rho", "0.25"]) == 0
    rep = _json_out(capsys)
    assert rep["primal"] == pytest.approx(0.5)
    assert rep["gap"] <= 0.05 * rep["primal"]


def test_indicator_csv_for_a_constant_is_zero(tmp_path, capsys):
    out = tmp_path / "c.tvf"
    from tvlab.grid import SpaceTimeField

    write_field(SpaceTimeField(1 / 32, (-0.484375,) * 2, [0.0, 0.125, 0.25], np.full((3, 32, 32), 2.0)), out)
    assert main(["indicator", "--field", str(out), "--point", "0,0,0.25", "--rhos", "0.25,0.125"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [float(r["indicator"]) for r in rows] == [0.0, 0.0]


def test_bad_magic_reports_its_code(tmp_path, capsys):
    p = tmp_path / "x.tvf"
    p.write_bytes(b"NOPE" + bytes(64))
    assert main(["tv", "--field", str(p), "--point", "0,0,0", "--rho", "0.1"]) == 1
    assert capsys.readouterr().err.startswith("error[bad-magic]")


def test_point_dimension_is_checked(simulated, capsys):
    assert main(["tv", "--field", str(simulated / "field.tvf"), "--point", "0,0", "--rho", "0.1"]) == 1
    assert "2 space coordinates and a time" in capsys.readouterr().err


def test_missing_required_arguments(capsys):
    assert main(["tv", "--point", "0,0,0", "--rho", "0.1"]) == 1
    assert "--field is required" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["tv", "--point", "a,b", "--rho", "0.1"])


# --- certify ----------------------------------------------------------------------------------


def test_certify_requires_a_seed(simulated, capsys):
    assert main(["certify", "energy", "--field", str(simulated / "field.tvf")]) == 1
    assert "--seed is required" in capsys.readouterr().err


def test_certify_energy_and_onelap(simulated, capsys):
    field = str(simulated / "field.tvf")
    args = ["certify", "energy", "--field", field, "--seed", "7", "--draws", "10", "--tol-c", "0.05"]
    assert main(args) == 0
    rep = _json_out(capsys)
    assert rep["kind"] == "energy" and rep["draws"] == 10 and rep["fitted_gamma"] <= 2
    assert rep["inputs"]["seed"] == 7 and len(rep["inputs"][field]) == 64
    main(args)
    assert _json_out(capsys) == rep
    dual = str(simulated / "dual.tvz")
    assert main(["certify", "onelap", "--field", field, "--dual", dual, "--seed", "7", "--draws", "5",
                 "--tol-c", "0.05"]) == 0
    assert _json_out(capsys)["verdict"] == "pass"


def test_certify_minimizer_with_closed_form_time_derivative(tmp_path, capsys):
    out = tmp_path / "u2.tvf"
    main(["example", "u2", "--box=-0.5,0.5", "--h", "0.03125", "--times", "0,0.03125,0.0625", "--out", str(out)])
    args = ["certify", "minimizer", "--field", str(out), "--example", "u2", "--rho", "0.4", "--seed", "1",
            "--draws", "6", "--tol-c", "0.05"]
    assert main(args) == 0
    rep = _json_out(capsys)
    assert rep["verdict"] == "pass" and rep["C"] == 0.05


def test_certify_minimizer_fails_on_a_non_minimizer(tmp_path, capsys):
    from tvlab.grid import sample_analytic

    f = sample_analytic(lambda x, t: 0.5 * np.sign(x[..., 0]) * np.abs(x[..., 1]), [(-0.5, 0.5)] * 2, 1 / 64,
                        list(np.linspace(0.0, 0.0625, 5)))
    out = tmp_path / "bad.tvf"
    write_field(f, out)
    args = ["certify", "minimizer", "--field", str(out), "--example", "step", "--rho", "0.4", "--seed", "7",
            "--draws", "20", "--tol-c", "0.05", "--dt", str(1 / 256)]
    assert main(args) == 2
    assert _json_out(capsys)["verdict"] == "fail"


# --- degiorgi / cascade / supbound --------------------------------------------------------------


def test_degiorgi_iterate_reports(capsys):
    assert main(["degiorgi", "iterate", "--N", "2", "--gamma", "2"]) == 0
    rep = _json_out(capsys)
    assert rep["constants"]["b"] == 32 and rep["constants"]["nu"] == 2.0**-22
    assert rep["max_rel_error_vs_critical"] <= 1e-12
    assert main(["degiorgi", "iterate", "--N", "2", "--gamma", "2", "--Y0", "twice-critical", "--steps", "200"]) == 0
    assert _json_out(capsys)["verdict"] == "diverged"


def test_degiorgi_lemma_and_expansion_run(simulated, capsys):
    field = str(simulated / "field.tvf")
    assert main(["degiorgi", "lemma", "--field", field, "--point", "0,0,0.125", "--rho", "0.05"]) in (0, 2)
    rep = _json_out(capsys)
    assert rep["verdict"] in ("pass", "fail", "not-applicable") and rep["mode"] == "empirical"
    assert main(["degiorgi", "expansion", "--field", field, "--point", "0,0,0", "--rho", "0.05"]) in (0, 2)
    assert "delta" in _json_out(capsys)


def test_cascade_exit_code_follows_verdict(tmp_path, capsys):
    out = tmp_path / "step.tvf"
    main(["example", "step", "--box=-0.3125,0.3125", "--h", "0.0009765625", "--times", "0,0.25", "--out", str(out)])
    assert main(["cascade", "--field", str(out), "--point", "0,0,0.25", "--rho0", "0.25"]) == 2
    rep = _json_out(capsys)
    assert rep["verdict"] == "fail" and rep["failed_stage"] == 1


def test_supbound_single_and_corpus(simulated, capsys):
    field = str(simulated / "field.tvf")
    assert main(["supbound", "--field", field, "--point", "0,0,0.0625", "--t", "0.125", "--rho", "0.05"]) == 0
    rep = _json_out(capsys)
    assert rep["r"] == 3.0 and rep["bound_shape"] > 0 and rep["verdict"] == "pass"
    assert main(["supbound", "--field", field]) == 1
    assert "--seed is required" in capsys.readouterr().err
    assert main(["supbound", "--field", field, "--seed", "2", "--draws", "3"]) == 0
    assert len(_json_out(capsys)["draws"]) == 3


def test_outputs_go_to_files_with_out(simulated, tmp_path):
    assert main(["degiorgi", "iterate", "--N", "1", "--gamma", "1", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "degiorgi_iterate.json").read_text())
    assert rep["constants"]["nu"] == 2.0**-7


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "tvlab.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("tvlab ")
