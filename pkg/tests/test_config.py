"""Config loading, validation, overrides and the resolved-config echo."""
import json

import pytest

from darksol.config import (
    ConfigError,
    ExperimentConfig,
    config_from_dict,
    load_config,
    parse_override,
    write_echo,
)

MINIMAL = {"trap": {"nu_z": 53.0, "nu_perp": 890.0, "atom_number": 1700}}


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def test_minimal_config_resolves_defaults_and_echoes(tmp_path):
    cfg = load_config(write(tmp_path, MINIMAL))
    assert isinstance(cfg, ExperimentConfig)
    assert cfg.model.kind == "npse"
    assert cfg.grid.n_points == "auto"
    assert cfg.sweep.evolve_ms == 120.0
    assert cfg.time.snapshot_interval_ms == 0.5
    assert cfg.trap.scattering_length_nm == pytest.approx(5.3)
    echo = write_echo(cfg, tmp_path / "out")
    data = json.loads(echo.read_text())
    assert set(data) == {"trap", "model", "grid", "time", "merge", "sweep", "fig2c",
                         "tracking", "resolution", "output"}


def test_echo_round_trip(tmp_path):
    cfg = config_from_dict(MINIMAL, ["grid.n_points=512", "model.kind=gpe1d"])
    echo = write_echo(cfg, tmp_path)
    assert load_config(echo) == cfg


def test_nu_z_above_nu_perp_names_both_fields():
    data = {"trap": {"nu_z": 900.0, "nu_perp": 890.0, "atom_number": 1700}}
    with pytest.raises(ConfigError) as info:
        config_from_dict(data)
    assert "trap.nu_z" in str(info.value) and "trap.nu_perp" in str(info.value)


def test_unknown_key_rejected():
    data = {"trap": {"nu_z": 53.0, "nu_x": 890.0, "atom_number": 1700}}
    with pytest.raises(ConfigError, match="trap.nu_x: unknown key"):
        config_from_dict(data)


def test_unknown_top_level_block_rejected():
    with pytest.raises(ConfigError, match="sweeps: unknown key"):
        config_from_dict({**MINIMAL, "sweeps": {}})


def test_missing_trap_and_missing_field():
    with pytest.raises(ConfigError, match="trap: required"):
        config_from_dict({})
    with pytest.raises(ConfigError, match="trap.atom_number: required"):
        config_from_dict({"trap": {"nu_z": 53.0, "nu_perp": 890.0}})


@pytest.mark.parametrize("n_points", [300, 128, "big"])
def test_grid_must_be_power_of_two(n_points):
    with pytest.raises(ConfigError, match="grid.n_points"):
        config_from_dict({**MINIMAL, "grid": {"n_points": n_points}})


@pytest.mark.parametrize("override, message", [
    ("trap.atom_number=true", "trap.atom_number: expected an integer"),
    ("trap.nu_z=\"fast\"", "trap.nu_z: expected a number"),
    ("tracking.follow_pair=1", "tracking.follow_pair: expected true or false"),
    ("model.kind=gpe3d", "model.kind"),
    ("sweep.amplitude_kind=mean", "sweep.amplitude_kind"),
])
def test_type_and_value_errors_name_the_field(override, message):
    with pytest.raises(ConfigError, match=message):
        config_from_dict(MINIMAL, [override])


def test_overrides_parse_json_then_fall_back_to_string():
    assert parse_override("sweep.amplitudes_um=[2, 3.5]") == ("sweep.amplitudes_um", [2, 3.5])
    assert parse_override("model.kind=gpe1d") == ("model.kind", "gpe1d")
    assert parse_override("grid.n_points=1024") == ("grid.n_points", 1024)
    with pytest.raises(ConfigError):
        parse_override("grid.n_points")


def test_override_creates_nested_blocks():
    cfg = config_from_dict(MINIMAL, [
        "trap.ramp.initial_nu_z=63", "trap.ramp.initial_nu_perp=408",
        "trap.ramp.duration_ms=10",
    ])
    assert cfg.trap.ramp.final_nu_z == 53.0
    assert cfg.trap.ramp.final_nu_perp == 890.0


def test_ramp_end_must_match_trap():
    data = {"trap": {**MINIMAL["trap"], "ramp": {
        "initial_nu_z": 63, "initial_nu_perp": 408, "duration_ms": 10, "final_nu_z": 60}}}
    with pytest.raises(ConfigError, match="final_nu_z"):
        config_from_dict(data)


def test_invalid_json_and_missing_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{trap: ", encoding="utf-8")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.json")


@pytest.mark.parametrize("name", ["critical_distance", "merge_paper", "paper_53_890",
                                  "paper_58_408", "tf1d_deep"])
def test_shipped_configs_validate(name):
    from pathlib import Path
    path = Path(__file__).resolve().parents[1] / "configs" / f"{name}.json"
    load_config(path)
