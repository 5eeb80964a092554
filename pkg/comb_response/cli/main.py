import argparse
import logging
import sys
from pathlib import Path
from typing import Any

from dotenv import dotenv_values
from pydantic import ValidationError

from comb_response.app.models.run_config import RunConfig, RunMode
from comb_response.app.runner import run
from comb_response.core.errors import (
    ConfigError,
    IntegrationError,
    InvalidParameterError,
    ScanAbortedError,
    SolverFailure,
)
from comb_response.core.logging_setup import configure_logging

logger = logging.getLogger(__name__)

EXIT_IO_ERROR = 1
EXIT_CONFIG_ERROR = 2
EXIT_SOLVER_FAILURE = 3

_RUN_CONFIG_KEYS = frozenset(RunConfig.model_fields)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="comb_response",
        description="Steady-state optical response of a J=1 -> J'=0 atom in a trichromatic comb field.",
        argument_default=argparse.SUPPRESS,
    )
    parser.add_argument("--mode", choices=[mode.value for mode in RunMode], help="What to run (default: scan).")
    parser.add_argument("--config", help="Flat key = value file; flags override its values.")
    parser.add_argument("--gamma-excited", dest="gamma_excited", type=float, help="Excited-state decay Gamma in kHz.")
    parser.add_argument("--gamma-ground", dest="gamma_ground", type=float, help="Ground redistribution gamma in kHz.")
    parser.add_argument(
        "--rabi",
        nargs="+",
        type=float,
        metavar="KHZ",
        help="One Rabi frequency for all three components, or three: central, lower, upper.",
    )
    parser.add_argument("--omega-m", dest="omega_m", type=float, help="Modulation frequency in kHz.")
    parser.add_argument("--delta", type=float, help="Detuning of the central component in kHz.")
    parser.add_argument("--epsilon", type=float, help="Ellipticity angle in radians, |epsilon| <= pi/4.")
    phases = parser.add_mutually_exclusive_group()
    phases.add_argument("--phases", help='Explicit phases phi_1,phi_2,phi_3, each 0 or pi (e.g. "0,0,pi").')
    phases.add_argument("--phase-preset", dest="phase_preset", help="center or wing.")
    parser.add_argument("--order", type=int, help="Harmonic truncation order N.")
    parser.add_argument("--scan", nargs=2, type=float, metavar=("START", "STOP"), help="Larmor range in kHz.")
    parser.add_argument("--points", type=int, help="Number of Larmor grid points.")
    parser.add_argument(
        "--derivative",
        action=argparse.BooleanOptionalAction,
        help="Add the negative-derivative (lock-in) columns.",
    )
    parser.add_argument("--output", help="Output CSV path; figure presets derive one file per curve from it.")
    parser.add_argument("--workers", type=int, help="Concurrent scan points (default: SCAN_WORKERS or CPU count).")
    parser.add_argument("--channels", help="Comma-separated subset of absorption,birefringence,dichroism.")
    parser.add_argument("--figure", choices=["fig3", "fig4"], help="Curve set for figure-preset mode.")
    parser.add_argument("--mod-amplitude", dest="mod_amplitude", type=float, help="Modulation amplitude A_m in kHz.")
    parser.add_argument("--teeth", type=int, help="Comb teeth per side n_max.")
    parser.add_argument("--laser-detuning", dest="laser_detuning", type=float, help="Comb detuning from resonance in kHz.")
    parser.add_argument("--doppler-width", dest="doppler_width", type=float, help="Doppler window width in kHz.")
    parser.add_argument("--check-larmor", dest="check_larmor", help="Comma-separated Larmor points for check modes.")
    parser.add_argument("--tolerance", type=float, help="Pass threshold of truncation-check.")
    parser.add_argument("--oracle-horizon", dest="oracle_horizon", type=float, help="Oracle horizon in units of 1/gamma.")
    parser.add_argument(
        "--trajectory-output",
        dest="trajectory_output",
        help="oracle-check: also write the last integrated period of every point to this CSV.",
    )
    return parser


def _expand_rabi(key: str, values: Any) -> dict[str, Any]:
    if isinstance(values, str):
        values = [part.strip() for part in values.split(",") if part.strip()]
    if len(values) == 1:
        values = [values[0]] * 3
    if len(values) != 3:
        raise ConfigError("expected one or three Rabi frequencies", key=key)
    return {"rabi_0": values[0], "rabi_minus": values[1], "rabi_plus": values[2]}


def _expand_scan(key: str, values: Any) -> dict[str, Any]:
    if isinstance(values, str):
        values = [part.strip() for part in values.split(",") if part.strip()]
    if len(values) != 2:
        raise ConfigError("expected START,STOP", key=key)
    return {"scan_start": values[0], "scan_stop": values[1]}


def _normalize_layer(raw: dict[str, Any]) -> dict[str, Any]:
    layer: dict[str, Any] = {}
    for raw_key, value in raw.items():
        key = raw_key.strip().lower().replace("-", "_")
        if key == "rabi":
            layer.update(_expand_rabi(raw_key, value))
        elif key == "scan":
            layer.update(_expand_scan(raw_key, value))
        elif key in _RUN_CONFIG_KEYS:
            layer[key] = value
        else:
            raise ConfigError("unknown configuration key", key=raw_key)
    return layer


def load_config_file(path: str) -> dict[str, Any]:
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"config file {path!r} not found", key="config")
    values = dotenv_values(config_path, encoding="utf-8")
    missing = [key for key, value in values.items() if value is None]
    if missing:
        raise ConfigError("expected key = value", key=missing[0])
    return _normalize_layer(values)


def _merge(base: dict[str, Any], override: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    # A preset chosen on a higher layer replaces explicit phases from a lower one.
    if "phase_preset" in override and "phases" not in override:
        merged.pop("phases", None)
    merged.update(override)
    return merged


def parse_config(argv: list[str] | None = None) -> RunConfig:
    """Defaults < config file < flags. Problems surface as ConfigError naming the key."""
    args = vars(build_parser().parse_args(argv))
    config_file = args.pop("config", None)

    values: dict[str, Any] = {}
    if config_file:
        values = _merge(values, load_config_file(config_file))
    values = _merge(values, _normalize_layer(args))

    try:
        return RunConfig(**values)
    except ValidationError as exc:
        error = exc.errors()[0]
        key = ".".join(str(part) for part in error.get("loc", ())) or None
        raise ConfigError(error.get("msg", "invalid value"), key=key) from exc


def main(argv: list[str] | None = None) -> int:
    configure_logging()
    try:
        config = parse_config(argv)
    except ConfigError as exc:
        logger.error("config_error: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    logger.info("effective_config: %s", config.effective_config())
    try:
        result = run(config)
    except (SolverFailure, ScanAbortedError, IntegrationError) as exc:
        logger.error("solver_failure: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER_FAILURE
    except InvalidParameterError as exc:
        logger.error("invalid_parameter: %s (parameter=%s)", exc, exc.parameter)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except OSError as exc:
        logger.error("io_error: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO_ERROR

    for line in result.summary:
        print(line)
    return result.exit_code
