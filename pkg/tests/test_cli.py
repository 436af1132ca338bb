import json

import pytest
import yaml
from hypothesis import given, settings, strategies as st

from polmem.cli import ScenarioConfig, compare_models, dump, loads, plasticity, sweep
from polmem.cli import presets
from polmem.cli.config import resolve_time, resolve_width, set_path
from polmem.cli.main import main
from polmem.errors import InvalidArgument

SMALL = """
name: small
model: jch
params: {J: 0.1, n_max: 2}
drive: {kind: gaussian, xi_i: 10.0, xi_f: 100.0, T: 10.0, sigma_w: T/4}
initial: mott
integrator: {output_samples: 201}
"""


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(SMALL)
    return path


@pytest.mark.parametrize("name", presets.names())
def test_presets_build_and_roundtrip(name):
    cfg = presets.get(name)
    model = cfg.build_model()
    assert cfg.resolved_duration(model.drive) > 0
    again = loads(dump(cfg))
    assert dump(again) == dump(cfg)


def test_twelve_presets():
    assert len(presets.names()) == 12


def test_tau_and_fraction_syntax():
    assert resolve_time("0.95tau", 80.0, "T") == pytest.approx(76.0)
    assert resolve_time("tau", 80.0, "T") == pytest.approx(80.0)
    assert resolve_width("T/4", 76.0, 80.0) == pytest.approx(19.0)
    assert resolve_width(3.5, 76.0, 80.0) == 3.5
    with pytest.raises(InvalidArgument):
        resolve_time("fast", 80.0, "T")
    with pytest.raises(InvalidArgument):
        resolve_time("2tau", None, "T")


def test_unit_normalisation_rescales_energies_and_times():
    doc = yaml.safe_load(SMALL)
    doc["params"]["g"] = 2.0
    doc["drive"].update(xi_i=20.0, xi_f=200.0, T=5.0)
    cfg = ScenarioConfig.from_dict(doc)
    drive = cfg.build_drive()
    assert (drive.xi_i, drive.xi_f, drive.T) == (10.0, 100.0, 10.0)
    assert cfg.build_model().params.J == pytest.approx(0.05)
    assert cfg.build_model().params.g == 1.0


@pytest.mark.parametrize("patch", [
    {"model": "spin"},
    {"drive": {"kind": "ramp"}},
    {"params": {"J": 0.1, "bogus": 1}},
    {"drive": {"kind": "triangular_ramp", "F0": 1, "dF": 3, "t_s": 30}},
    {"integrator": {"rtol": -1}},
    {"drive": {"kind": "gaussian", "xi_i": 100.0, "xi_f": 10.0, "T": 10.0}},
])
def test_invalid_configs_rejected(patch):
    doc = yaml.safe_load(SMALL)
    doc.update(patch)
    with pytest.raises(InvalidArgument):
        cfg = ScenarioConfig.from_dict(doc)
        cfg.build_model()
        cfg.integrator_config()


@settings(max_examples=25, deadline=None)
@given(T=st.floats(5.0, 200.0), ratio=st.floats(0.1, 0.6), samples=st.integers(2, 5000))
def test_config_roundtrip_property(T, ratio, samples):
    doc = yaml.safe_load(SMALL)
    doc["drive"].update(T=T, sigma_w=ratio * T)
    doc["integrator"]["output_samples"] = samples
    cfg = ScenarioConfig.from_dict(doc)
    text = dump(cfg)
    assert dump(loads(text)) == text


def test_cli_presets_list(capsys):
    assert main(["presets", "list"]) == 0
    out = capsys.readouterr().out
    assert "fig4d" in out and "fig2a_T095" in out


def test_cli_validate(small_cfg, capsys):
    assert main(["validate", "--config", str(small_cfg)]) == 0
    assert capsys.readouterr().out.startswith("ok: small")


def test_cli_validate_reports_category(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(SMALL.replace("xi_i: 10.0", "xi_i: 1000.0"))
    assert main(["validate", "--config", str(bad)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "validation"


def test_cli_run_is_deterministic(small_cfg, tmp_path):
    outs = []
    for k in range(2):
        d = tmp_path / f"o{k}"
        assert main(["run", "--config", str(small_cfg), "--out", str(d)]) == 0
        outs.append((d / "small_trajectory.csv").read_bytes())
    assert outs[0] == outs[1]
    summary = json.loads((tmp_path / "o0" / "small_summary.json").read_text())
    assert summary["schema_version"] == "1.0"
    assert summary["signed_area_analytic"] is not None
    header = outs[0].splitlines()[0].decode()
    assert header.startswith("time,drive,drive_rate,var_N_0,var_N_1")


def test_cli_cutoff_overflow_leaves_no_outputs(tmp_path, capsys):
    cfg = tmp_path / "kerr.yaml"
    cfg.write_text("""
name: tight
model: kerr
params: {n_max: 5}
drive: {kind: triangular_ramp, F0: 1.0, dF: 3.0, t_s: 30.0}
initial: {kind: fock, photons: [0]}
""")
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 4
    assert json.loads(capsys.readouterr().err)["error"] == "cutoff-overflow"
    assert list(out.iterdir()) == []


def test_cli_circuit_columns(tmp_path):
    doc = yaml.safe_load(SMALL)
    doc["observables"] = {"circuit": True}
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump(doc))
    assert main(["run", "--config", str(path), "--out", str(tmp_path)]) == 0
    header = (tmp_path / "small_trajectory.csv").read_text().splitlines()[0].split(",")
    for col in ("a_0", "b_0", "xi_dot", "V_R", "R"):
        assert col in header


def test_sweep_rows_and_abort(small_cfg, tmp_path):
    cfg = loads(small_cfg.read_text())
    rows = sweep(cfg, "drive.T", [8.0, 12.0], tmp_path)
    assert [r["value"] for r in rows] == [8.0, 12.0]
    assert (tmp_path / "small_sweep.csv").exists()
    with pytest.raises(InvalidArgument, match="drive.T = -1.0"):
        sweep(cfg, "drive.T", [8.0, -1.0])


def test_set_path_unknown_section(small_cfg):
    with pytest.raises(InvalidArgument):
        set_path(loads(small_cfg.read_text()), "nothing.T", 1.0)


def test_plasticity_classification():
    assert plasticity([100.0, -100.0])[1] == "plastic"
    assert plasticity([100.0, 95.0])[1] == "non-plastic"
    with pytest.raises(InvalidArgument):
        plasticity([1.0])


def test_compare_models_small(small_cfg):
    cfg = loads(small_cfg.read_text())
    sf = presets.PLASTICITY_STATES["fig3a"][1]
    report = compare_models([cfg], [["mott", sf]])
    entry = report["models"][0]
    assert entry["classification"] == "plastic"
    assert entry["signed_areas"][0] * entry["signed_areas"][1] < 0
