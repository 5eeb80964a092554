"""Absorption, circular birefringence and circular dichroism line shapes."""

import concurrent.futures
import logging
import math
from contextvars import copy_context
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence, Union

import numpy as np
import pandas as pd

from comb_response.core.atomfield import EpsilonLike, RelaxationRates, TrichromaticField, as_ellipticity
from comb_response.core.concurrency import resolve_workers
from comb_response.core.errors import (
    DegenerateDenominatorError,
    InvalidParameterError,
    ScanAbortedError,
    SolverFailure,
)
from comb_response.core.floquet import HarmonicState, assemble_from_blocks, harmonic_blocks, solve_steady_state

logger = logging.getLogger(__name__)

CHANNELS = ("absorption", "birefringence", "dichroism")
DERIVATIVE_CHANNELS = tuple(f"d_{name}" for name in CHANNELS)
ELLIPTICITY_GUARD = 1e-6
FEATURE_WINDOW_KHZ = 1.5
MAX_FAILURE_FRACTION = 0.10


@dataclass(frozen=True)
class OpticalResponse:
    absorption: float
    birefringence: float
    dichroism: float

    def as_tuple(self) -> tuple[float, float, float]:
        return self.absorption, self.birefringence, self.dichroism


def check_ellipticity_guard(eps: EpsilonLike) -> float:
    epsilon = as_ellipticity(eps).epsilon
    if abs(epsilon) > math.pi / 4 - ELLIPTICITY_GUARD:
        raise DegenerateDenominatorError(
            f"ellipticity {epsilon!r} too close to +-pi/4; a branch coupling vanishes",
            parameter="epsilon",
        )
    return epsilon


def field_weighted_coherence(state: HarmonicState, element: str, field: TrichromaticField) -> complex:
    """Time average of conj(Omega(t)) * rho_ge(t), scaled by the reference tooth.

    A field with only the central tooth gives back the DC coherence itself. Sideband
    teeth pair with the first harmonics, where Zeeman coherences oscillating at
    twice the modulation frequency show up.
    """
    comps = field.components()
    reference = comps[0] if comps[0] != 0 else max(comps.values(), key=abs)
    total = 0j
    for k, amplitude in comps.items():
        if amplitude != 0 and abs(k) <= state.order:
            total += np.conj(amplitude) * state.element(element, k)
    return complex(total / np.conj(reference))


def observables_from_state(state: HarmonicState, eps: EpsilonLike, field: TrichromaticField) -> OpticalResponse:
    epsilon = check_ellipticity_guard(eps)
    reference = field.reference_rabi()
    if reference == 0.0:
        return OpticalResponse(0.0, 0.0, 0.0)

    c, s = math.cos(epsilon), math.sin(epsilon)
    lower = field_weighted_coherence(state, "rho_me", field)
    upper = field_weighted_coherence(state, "rho_pe", field)
    sigma_plus = (c + s) * reference
    # The two sigma- denominators differ in sign between the channels.
    sigma_minus_imag = (s - c) * reference
    sigma_minus_real = (c - s) * reference

    return OpticalResponse(
        absorption=lower.imag / sigma_plus + upper.imag / sigma_minus_imag,
        birefringence=lower.real / sigma_plus - upper.real / sigma_minus_real,
        dichroism=lower.imag / sigma_plus - upper.imag / sigma_minus_imag,
    )


def solve_point(
    field: TrichromaticField,
    eps: EpsilonLike,
    omega_L: float,
    rates: RelaxationRates,
    N: int = 2,
) -> OpticalResponse:
    blocks = harmonic_blocks(field, eps, rates)
    state = solve_steady_state(assemble_from_blocks(blocks, omega_L, N))
    return observables_from_state(state, eps, field)


@dataclass(frozen=True)
class LarmorGrid:
    start: float
    stop: float
    count: int

    def __post_init__(self) -> None:
        if isinstance(self.count, bool) or int(self.count) != self.count or self.count < 2:
            raise InvalidParameterError("grid needs at least 2 points", parameter="points")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)) or not self.start < self.stop:
            raise InvalidParameterError("grid needs finite start < stop", parameter="scan")
        object.__setattr__(self, "count", int(self.count))

    @property
    def step(self) -> float:
        return (self.stop - self.start) / (self.count - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


GridLike = Union[LarmorGrid, tuple[float, float, int]]


def as_grid(grid: GridLike) -> LarmorGrid:
    if isinstance(grid, LarmorGrid):
        return grid
    start, stop, count = grid
    return LarmorGrid(float(start), float(stop), count)


@dataclass(frozen=True)
class ScanFailure:
    index: int
    omega_L: float
    message: str


@dataclass(frozen=True)
class LineShapeScan:
    grid: np.ndarray
    values: np.ndarray
    derivatives: Optional[np.ndarray] = None
    failures: tuple[ScanFailure, ...] = ()

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.size < 2:
            raise InvalidParameterError("scan grid needs at least 2 points", parameter="grid")
        if not np.all(np.diff(grid) > 0):
            raise InvalidParameterError("scan grid must be strictly increasing", parameter="grid")
        if values.shape != (grid.size, len(CHANNELS)):
            raise InvalidParameterError("one response per grid point is required", parameter="values")
        if self.derivatives is not None and np.shape(self.derivatives) != values.shape:
            raise InvalidParameterError("derivatives must match responses", parameter="derivatives")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @property
    def step(self) -> float:
        return float(self.grid[-1] - self.grid[0]) / (self.grid.size - 1)

    @property
    def is_uniform(self) -> bool:
        tolerance = 1e-12 * max(float(np.max(np.abs(self.grid))), 1.0)
        return bool(np.all(np.abs(np.diff(self.grid) - self.step) <= tolerance))

    @property
    def responses(self) -> tuple[OpticalResponse, ...]:
        return tuple(OpticalResponse(*map(float, row)) for row in self.values)

    def channel(self, name: str) -> np.ndarray:
        if name in CHANNELS:
            return self.values[:, CHANNELS.index(name)]
        if name in DERIVATIVE_CHANNELS:
            if self.derivatives is None:
                raise InvalidParameterError(f"channel {name!r} needs the lock-in derivative", parameter="channel")
            return self.derivatives[:, DERIVATIVE_CHANNELS.index(name)]
        raise InvalidParameterError(f"unknown channel {name!r}", parameter="channel")

    def to_frame(self, channels: Optional[Sequence[str]] = None) -> pd.DataFrame:
        selected = list(channels) if channels else list(CHANNELS)
        for name in selected:
            if name not in CHANNELS:
                raise InvalidParameterError(f"unknown channel {name!r}", parameter="channels")
        data = {"omega_L_khz": self.grid}
        for name in selected:
            data[name] = self.channel(name)
        if self.derivatives is not None:
            for name in selected:
                data[f"d_{name}"] = self.channel(f"d_{name}")
        return pd.DataFrame(data)


def scan_larmor(
    field: TrichromaticField,
    eps: EpsilonLike,
    rates: RelaxationRates,
    N: int,
    grid: GridLike,
    *,
    workers: Optional[int] = None,
    derivative: bool = False,
    max_failure_fraction: float = MAX_FAILURE_FRACTION,
) -> LineShapeScan:
    grid = as_grid(grid)
    check_ellipticity_guard(eps)
    blocks = harmonic_blocks(field, eps, rates)
    omegas = grid.points()
    values = np.full((grid.count, len(CHANNELS)), np.nan)
    failures: list[ScanFailure] = []

    def _solve(omega_L: float) -> tuple[float, float, float]:
        state = solve_steady_state(assemble_from_blocks(blocks, omega_L, N))
        return observables_from_state(state, eps, field).as_tuple()

    worker_count = min(resolve_workers(workers), grid.count)
    logger.info(
        "scan_started: points=%d range=[%s, %s] order=%d workers=%d",
        grid.count,
        grid.start,
        grid.stop,
        N,
        worker_count,
    )
    with concurrent.futures.ThreadPoolExecutor(max_workers=worker_count) as ex:
        futures = {
            ex.submit(copy_context().run, _solve, float(omegas[index])): index
            for index in range(grid.count)
        }
        for fut in concurrent.futures.as_completed(futures):
            index = futures[fut]
            try:
                values[index] = fut.result()
            except SolverFailure as exc:
                failures.append(ScanFailure(index, float(omegas[index]), str(exc)))
                logger.warning("scan_point_failed: index=%d omega_L=%s error=%s", index, omegas[index], exc)

    failures.sort(key=lambda failure: failure.index)
    if len(failures) > max_failure_fraction * grid.count:
        raise ScanAbortedError(
            f"{len(failures)} of {grid.count} scan points failed",
            failures=failures,
        )
    logger.info("scan_finished: points=%d failures=%d", grid.count, len(failures))

    scan = LineShapeScan(grid=omegas, values=values, failures=tuple(failures))
    return lockin_derivative(scan) if derivative else scan


def lockin_derivative(scan: LineShapeScan) -> LineShapeScan:
    """Negative first derivative along the grid, as phase-sensitive detection reports it."""
    if not scan.is_uniform:
        raise InvalidParameterError("lock-in derivative needs a uniform grid", parameter="grid")
    edge_order = 2 if scan.grid.size >= 3 else 1
    derivatives = -np.gradient(scan.values, scan.step, axis=0, edge_order=edge_order)
    return replace(scan, derivatives=derivatives)


@dataclass(frozen=True)
class Feature:
    expected: float
    position: Optional[float]
    amplitude: float

    @property
    def found(self) -> bool:
        return self.position is not None


def _strict_extrema(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    middle = values[1:-1]
    peaks = np.flatnonzero((middle > values[:-2]) & (middle > values[2:])) + 1
    dips = np.flatnonzero((middle < values[:-2]) & (middle < values[2:])) + 1
    return peaks, dips


def _within(grid: np.ndarray, indices: np.ndarray, center: float, window: float) -> np.ndarray:
    return indices[np.abs(grid[indices] - center) <= window + 1e-9]


def _dispersive_center(grid: np.ndarray, values: np.ndarray, peak: int, dip: int) -> float:
    """Where a lock-in trace crosses the level halfway between its peak and its dip."""
    lo, hi = sorted((peak, dip))
    level = 0.5 * (values[peak] + values[dip])
    offsets = values[lo:hi + 1] - level
    crossings = np.flatnonzero(offsets[:-1] * offsets[1:] <= 0.0) + lo
    middle = 0.5 * (grid[lo] + grid[hi])
    if crossings.size == 0:
        return float(middle)
    k = int(crossings[np.argmin(np.abs(grid[crossings] - middle))])
    if values[k] == level or values[k + 1] == values[k]:
        return float(grid[k])
    fraction = (level - values[k]) / (values[k + 1] - values[k])
    return float(grid[k] + fraction * (grid[k + 1] - grid[k]))


def feature_extract(
    scan: LineShapeScan,
    channel: str,
    expected_positions: Iterable[float],
    *,
    window: float = FEATURE_WINDOW_KHZ,
) -> list[Feature]:
    """Locate the resonance near each expected Larmor frequency.

    On a line-shape channel the feature is the strongest strict extremum within
    ``window``. On a lock-in channel a resonance shows up as a dispersive pair; the
    feature sits where the trace crosses the midpoint between its strongest peak
    and dip, and is not found without both. Amplitudes are measured from the
    scan median in both cases.
    """
    values = scan.channel(channel)
    dispersive = channel in DERIVATIVE_CHANNELS
    baseline = float(np.nanmedian(values))
    peaks, dips = _strict_extrema(values)
    low, high = float(scan.grid[0]), float(scan.grid[-1])

    features = []
    for expected in expected_positions:
        expected = float(expected)
        if expected < low or expected > high:
            raise InvalidParameterError(
                f"feature position {expected} outside scan range [{low}, {high}]",
                parameter="expected_positions",
            )
        near_peaks = _within(scan.grid, peaks, expected, window)
        near_dips = _within(scan.grid, dips, expected, window)
        nearby = np.concatenate([near_peaks, near_dips])
        if nearby.size == 0:
            features.append(Feature(expected, None, 0.0))
            continue
        deviations = np.abs(values[nearby] - baseline)
        best = int(nearby[int(np.argmax(deviations))])
        amplitude = float(abs(values[best] - baseline))

        if not dispersive:
            position: Optional[float] = float(scan.grid[best])
        elif near_peaks.size and near_dips.size:
            peak = int(near_peaks[int(np.argmax(values[near_peaks]))])
            dip = int(near_dips[int(np.argmin(values[near_dips]))])
            position = _dispersive_center(scan.grid, values, peak, dip)
        else:
            position = None
        features.append(Feature(expected, position, amplitude))
    return features
