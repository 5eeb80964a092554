import math

import pytest

from comb_response.app.models.run_config import RunConfig, RunMode
from comb_response.cli import main as cli_main
from comb_response.cli.main import parse_config
from comb_response.core.atomfield import PhaseRegion
from comb_response.core.errors import ConfigError

pytestmark = pytest.mark.unit


def test_defaults_match_standard_parameters():
    config = parse_config([])
    assert config.mode is RunMode.scan
    assert (config.gamma_excited, config.gamma_ground) == (5600.0, 1.0)
    assert (config.rabi_0, config.rabi_minus, config.rabi_plus) == (5.0, 5.0, 5.0)
    assert config.omega_m == 12.0
    assert config.order == 2
    assert (config.scan_start, config.scan_stop, config.points) == (-20.0, 20.0, 801)
    assert config.derivative is True
    assert config.resolved_phases() == (0.0, 0.0, 0.0)


def test_epsilon_beyond_quarter_wave_is_rejected():
    with pytest.raises(ConfigError) as excinfo:
        parse_config(["--epsilon", "0.9"])
    assert excinfo.value.key == "epsilon"


def test_phases_accept_pi():
    config = parse_config(["--phases", "0,0,pi"])
    assert config.resolved_phases() == (0.0, 0.0, math.pi)


def test_phases_must_be_zero_or_pi():
    with pytest.raises(ConfigError) as excinfo:
        parse_config(["--phases", "0,1,0"])
    assert excinfo.value.key == "phases"


def test_phase_preset_and_phases_are_exclusive():
    with pytest.raises(SystemExit):
        parse_config(["--phases", "0,0,0", "--phase-preset", "center"])


@pytest.mark.parametrize(
    "argv, expected",
    [
        (["--rabi", "7"], (7.0, 7.0, 7.0)),
        (["--rabi", "1", "2", "3"], (1.0, 2.0, 3.0)),
    ],
)
def test_rabi_expansion(argv, expected):
    config = parse_config(argv)
    assert (config.rabi_0, config.rabi_minus, config.rabi_plus) == expected


def test_rabi_needs_one_or_three_values():
    with pytest.raises(ConfigError) as excinfo:
        parse_config(["--rabi", "1", "2"])
    assert excinfo.value.key == "rabi"


def test_scan_flag_sets_range():
    config = parse_config(["--scan", "-5", "5", "--points", "11", "--no-derivative"])
    assert (config.scan_start, config.scan_stop, config.points) == (-5.0, 5.0, 11)
    assert config.derivative is False


def test_reversed_scan_range_is_rejected():
    with pytest.raises(ConfigError) as excinfo:
        parse_config(["--scan", "5", "-5"])
    assert excinfo.value.key == "scan_stop"


def test_empty_scan_range_from_file_names_the_key(tmp_path):
    config_file = tmp_path / "run.conf"
    config_file.write_text("scan_start = 3\nscan_stop = 3\n", encoding="utf-8")
    with pytest.raises(ConfigError) as excinfo:
        parse_config(["--config", str(config_file)])
    assert excinfo.value.key == "scan_stop"


def test_config_file_is_overridden_by_flags(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("# standard drive\nomega_m = 10\nrabi = 3\nphases = 0,0,pi\n", encoding="utf-8")
    config = parse_config(["--config", str(path), "--omega-m", "11"])
    assert config.omega_m == 11.0
    assert config.rabi_minus == 3.0
    assert config.resolved_phases() == (0.0, 0.0, math.pi)


def test_preset_flag_replaces_phases_from_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("phases = 0,0,0\n", encoding="utf-8")
    config = parse_config(["--config", str(path), "--phase-preset", "center"])
    assert config.phases is None
    assert config.phase_preset is PhaseRegion.center


def test_unknown_key_in_config_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("bogus = 1\n", encoding="utf-8")
    with pytest.raises(ConfigError) as excinfo:
        parse_config(["--config", str(path)])
    assert excinfo.value.key == "bogus"


def test_malformed_value_in_config_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("points = many\n", encoding="utf-8")
    with pytest.raises(ConfigError) as excinfo:
        parse_config(["--config", str(path)])
    assert excinfo.value.key == "points"


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError) as excinfo:
        parse_config(["--config", str(tmp_path / "absent.conf")])
    assert excinfo.value.key == "config"


def test_channels_are_validated():
    assert parse_config(["--channels", "absorption,dichroism"]).channels == ["absorption", "dichroism"]
    with pytest.raises(ConfigError):
        parse_config(["--channels", "phase"])


def test_effective_config_is_json_ready():
    payload = RunConfig().effective_config()
    assert payload["mode"] == "scan"
    assert payload["phase_preset"] == "wing"


def test_main_returns_config_exit_code(capsys):
    assert cli_main.main(["--epsilon", "0.9"]) == cli_main.EXIT_CONFIG_ERROR
    assert "epsilon" in capsys.readouterr().err


def test_trajectory_output_is_optional():
    assert parse_config([]).trajectory_output is None
    config = parse_config(["--mode", "oracle-check", "--trajectory-output", "period.csv"])
    assert config.trajectory_output == "period.csv"
