"""Orchestration of every run mode: compute, write CSVs and their sidecars."""

import logging
import math
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import pandas as pd

from comb_response.app.models.run_config import FigurePreset, RunConfig, RunMode
from comb_response.core.atomfield import PhaseRegion
from comb_response.core.comb import (
    DopplerWindow,
    classify_phase_triple,
    doppler_window,
    field_from_teeth,
    phase_class_map,
    teeth_spectrum,
    tooth_for_detuning,
)
from comb_response.core.errors import InvalidParameterError
from comb_response.core.floquet import truncation_check
from comb_response.core.logging_setup import current_run_id, current_stage, run_context, stage_context
from comb_response.core.observables import LineShapeScan, feature_extract, scan_larmor
from comb_response.core.oracle import compare_with_floquet, trajectory_frame
from comb_response.core.run_metadata import build_run_metadata, render_sidecar

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"
EXIT_OK = 0
EXIT_CHECK_FAILED = 4
FIG4_ELLIPTICITIES = (0.0, 0.1, -0.1, 0.2, -0.2)
SUPPRESSION_RATIO = 0.05


@dataclass
class RunResult:
    exit_code: int = EXIT_OK
    outputs: list[Path] = field(default_factory=list)
    summary: list[str] = field(default_factory=list)


def sidecar_path(csv_path: Path) -> Path:
    return csv_path.with_suffix(".meta")


def write_csv(frame: pd.DataFrame, path: Path, config: RunConfig, result: RunResult, extra: Optional[dict] = None) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    entries = build_run_metadata(config.effective_config())
    entries["run_id"] = current_run_id()
    entries["stage"] = " ".join(part for part in current_stage() if part != "-")
    for key, value in (extra or {}).items():
        entries[key] = str(value)
    sidecar = sidecar_path(path)
    sidecar.write_text(render_sidecar(entries), encoding="utf-8")
    result.outputs.extend([path, sidecar])
    logger.info("output_written: path=%s rows=%d", path, len(frame))


def _report(result: RunResult, line: str) -> None:
    result.summary.append(line)
    logger.info("%s", line)


def _scan(config: RunConfig) -> LineShapeScan:
    return scan_larmor(
        config.trichromatic_field(),
        config.ellipticity(),
        config.rates(),
        config.order,
        config.grid(),
        workers=config.workers,
        derivative=config.derivative,
    )


def _failure_entries(scan: LineShapeScan) -> dict:
    if not scan.failures:
        return {}
    return {"failures": ",".join(str(f.index) for f in scan.failures)}


def run_scan(config: RunConfig, result: RunResult) -> None:
    scan = _scan(config)
    write_csv(scan.to_frame(config.channels), Path(config.output), config, result, _failure_entries(scan))
    _report(result, f"scan: points={config.points} failures={len(scan.failures)}")


def _comb_teeth_count(config: RunConfig) -> int:
    if config.teeth is not None:
        return config.teeth
    count = math.ceil(config.mod_amplitude / config.omega_m) + 20
    if config.laser_detuning is not None:
        reach = abs(config.laser_detuning) + 0.5 * (config.doppler_width or 0.0)
        count = max(count, math.ceil(reach / config.omega_m) + 1)
    return count


def _phase_label(phase: float) -> str:
    return "pi" if phase else "0"


def run_comb(config: RunConfig, result: RunResult) -> None:
    spectrum = teeth_spectrum(config.omega_m, config.mod_amplitude, _comb_teeth_count(config))
    classes = phase_class_map(spectrum)
    if config.laser_detuning is not None:
        try:
            center = tooth_for_detuning(spectrum, config.laser_detuning)
            phase_class = classify_phase_triple(spectrum, center.n)
            _report(result, f"comb: window_center_tooth={center.n} phase_class={phase_class.value}")
            local = field_from_teeth(spectrum, center.n, rabi_scale=config.rabi_0, delta=config.delta)
            _report(
                result,
                "comb: local_field phases=" + ",".join(_phase_label(p) for p in local.phases)
                + f" rabi={local.rabi_0:.4g},{local.rabi_minus:.4g},{local.rabi_plus:.4g}",
            )
        except InvalidParameterError as exc:
            logger.warning("comb_local_field_unavailable: %s", exc)
        if config.doppler_width is not None:
            spectrum = doppler_window(spectrum, DopplerWindow(config.laser_detuning, config.doppler_width))

    rows = [
        {
            "n": tooth.n,
            "frequency_offset_khz": spectrum.frequency_offset(tooth.n),
            "amplitude": tooth.amplitude,
            "sign": tooth.sign,
            "phase_class": classes[tooth.n].value if tooth.n in classes else "edge",
        }
        for tooth in spectrum.teeth
        if tooth.amplitude > 0.0
    ]
    frame = pd.DataFrame(rows, columns=["n", "frequency_offset_khz", "amplitude", "sign", "phase_class"])
    write_csv(frame, Path(config.output), config, result, {"mod_index": repr(spectrum.mod_index)})
    _report(result, f"comb: mod_index={spectrum.mod_index:g} teeth_written={len(frame)}")


def run_oracle_check(config: RunConfig, result: RunResult) -> None:
    rows = []
    trajectories = []
    for omega_L in config.check_larmor:
        with stage_context("oracle-check", f"omega_L={omega_L:g}"):
            comparison = compare_with_floquet(
                config.trichromatic_field(),
                config.ellipticity(),
                omega_L,
                config.rates(),
                config.order,
                horizon=config.oracle_horizon,
            )
        if config.trajectory_output:
            trajectories.append(trajectory_frame(comparison.period_samples).assign(omega_L_khz=omega_L))
        worst_element = max(comparison.element_report().items(), key=lambda item: item[1])[0]
        rows.append(
            {
                "omega_L_khz": omega_L,
                "max_deviation": comparison.max_deviation,
                "worst_element": worst_element,
                "worst_ratio": comparison.worst_ratio,
                "passed": comparison.passed,
            }
        )
        _report(
            result,
            f"oracle-check: omega_L={omega_L:g} max_deviation={comparison.max_deviation:.3e} "
            f"worst_element={worst_element} passed={comparison.passed}",
        )
        if not comparison.passed:
            result.exit_code = EXIT_CHECK_FAILED
    write_csv(pd.DataFrame(rows), Path(config.output), config, result)
    if trajectories:
        frame = pd.concat(trajectories, ignore_index=True)
        frame = frame[["omega_L_khz", *frame.columns.drop("omega_L_khz")]]
        write_csv(frame, Path(config.trajectory_output), config, result)


def run_truncation_check(config: RunConfig, result: RunResult) -> None:
    rows = []
    for omega_L in config.check_larmor:
        report = truncation_check(
            config.trichromatic_field(),
            config.ellipticity(),
            omega_L,
            config.rates(),
            config.order,
            config.tolerance,
        )
        rows.append(
            {
                "omega_L_khz": omega_L,
                "order": report.order,
                "max_relative_difference": report.max_relative_difference,
                "passed": report.passed,
            }
        )
        _report(
            result,
            f"truncation-check: omega_L={omega_L:g} order={report.order} "
            f"max_relative_difference={report.max_relative_difference:.3e} passed={report.passed}",
        )
        if not report.passed:
            result.exit_code = EXIT_CHECK_FAILED
    write_csv(pd.DataFrame(rows), Path(config.output), config, result)


def _stem(config: RunConfig) -> Path:
    output = Path(config.output)
    return output.with_name(output.stem)


def _curve_path(config: RunConfig, suffix: str) -> Path:
    stem = _stem(config)
    return stem.with_name(f"{stem.name}_{suffix}.csv")


def _resonance_positions(config: RunConfig) -> list[float]:
    half = 0.5 * config.omega_m
    candidates = (-config.omega_m, -half, 0.0, half, config.omega_m)
    return [p for p in candidates if config.scan_start <= p <= config.scan_stop]


def run_fig3(config: RunConfig, result: RunResult) -> None:
    scans = {}
    for region in (PhaseRegion.center, PhaseRegion.wing):
        curve = config.model_copy(update={"phase_preset": region, "phases": None, "epsilon": 0.0})
        with stage_context("figure-preset", f"fig3 {region.value}"):
            scans[region] = _scan(curve)
        write_csv(
            scans[region].to_frame(curve.channels),
            _curve_path(config, f"fig3_{region.value}"),
            curve,
            result,
            _failure_entries(scans[region]),
        )

    positions = _resonance_positions(config)
    channel = "d_absorption" if config.derivative else "absorption"
    wing = feature_extract(scans[PhaseRegion.wing], channel, positions)
    for feature in wing:
        _report(
            result,
            f"fig3 wing {channel}: expected={feature.expected:g} found={feature.position} "
            f"amplitude={feature.amplitude:.3e}",
        )
    missing = [f.expected for f in wing if not f.found]
    if missing:
        logger.warning("fig3_resonance_missing: channel=%s positions=%s", channel, missing)
        result.exit_code = EXIT_CHECK_FAILED

    halves = [p for p in positions if abs(abs(p) - 0.5 * config.omega_m) < 1e-12]
    center = feature_extract(scans[PhaseRegion.center], channel, halves)
    wing_halves = [f for f in wing if f.expected in halves]
    for w, c in zip(wing_halves, center):
        ratio = c.amplitude / w.amplitude if w.amplitude > 0 else math.inf
        suppressed = ratio <= SUPPRESSION_RATIO
        _report(
            result,
            f"fig3 half-modulation resonance at {w.expected:g}: center/wing amplitude ratio={ratio:.3e} "
            f"suppressed={suppressed}",
        )
        if not suppressed:
            result.exit_code = EXIT_CHECK_FAILED


def run_fig4(config: RunConfig, result: RunResult) -> None:
    for delta in (0.0, config.gamma_excited):
        for epsilon in FIG4_ELLIPTICITIES:
            curve = config.model_copy(update={"delta": delta, "epsilon": epsilon})
            with stage_context("figure-preset", f"fig4 delta={delta:g} eps={epsilon:+g}"):
                scan = _scan(curve)
            write_csv(
                scan.to_frame(curve.channels),
                _curve_path(config, f"fig4_delta{delta:g}_eps{epsilon:+g}"),
                curve,
                result,
                _failure_entries(scan),
            )
    _report(result, f"fig4: curves={2 * len(FIG4_ELLIPTICITIES)}")


def run_figure_preset(config: RunConfig, result: RunResult) -> None:
    if config.figure is FigurePreset.fig3:
        run_fig3(config, result)
    else:
        run_fig4(config, result)


_MODE_HANDLERS: dict[RunMode, Callable[[RunConfig, RunResult], None]] = {
    RunMode.scan: run_scan,
    RunMode.comb: run_comb,
    RunMode.oracle_check: run_oracle_check,
    RunMode.truncation_check: run_truncation_check,
    RunMode.figure_preset: run_figure_preset,
}


def run(config: RunConfig, *, run_id: Optional[str] = None) -> RunResult:
    result = RunResult()
    with run_context(run_id or uuid.uuid4().hex[:12]):
        with stage_context(config.mode.value):
            logger.info("run_started: mode=%s output=%s", config.mode.value, config.output)
            _MODE_HANDLERS[config.mode](config, result)
            logger.info("run_finished: mode=%s exit_code=%d outputs=%d", config.mode.value, result.exit_code, len(result.outputs))
    return result
