"""Direct time integration of the driven master equation.

Classical fixed-step RK4 on the ten active elements. The RK4 step is linear
in the state, so the steps of one modulation period are multiplied into a
period propagator which is then powered across the transient; only the last
two periods are stepped sample by sample.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy import integrate

from comb_response.core.atomfield import (
    ACTIVE_COUNT,
    CONJUGATE_PARTNER,
    ELEMENT_INDEX,
    ELEMENT_NAMES,
    POPULATION_ELEMENTS,
    EpsilonLike,
    RelaxationRates,
    TrichromaticField,
    as_ellipticity,
    coupling_generators,
    equilibrium_vector,
    static_generator,
    total_rabi,
)
from comb_response.core.errors import IntegrationError, InvalidParameterError
from comb_response.core.floquet import assemble_system, solve_steady_state

logger = logging.getLogger(__name__)

SAMPLES_PER_PERIOD = 128
STEP_DIVISOR = 50.0
DEFAULT_HORIZON = 20.0
MIN_HORIZON = 5.0
TRACE_TOLERANCE = 1e-6
PERIODICITY_TOLERANCE = 1e-6
MIN_DC_SAMPLES = 64


@dataclass(frozen=True)
class DensityMatrixSnapshot:
    time: float
    elements: np.ndarray

    def element(self, name: str) -> complex:
        return complex(self.elements[ELEMENT_INDEX[name]])

    def trace(self) -> complex:
        return complex(np.sum(self.elements[list(POPULATION_ELEMENTS)]))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.elements - np.conj(self.elements[list(CONJUGATE_PARTNER)]))))

    def population_imaginary_error(self) -> float:
        return float(np.max(np.abs(self.elements[list(POPULATION_ELEMENTS)].imag)))

    def is_physical(self, tol: float = 1e-8) -> bool:
        return (
            abs(self.trace() - 1.0) <= tol
            and self.hermiticity_error() <= tol
            and self.population_imaginary_error() <= tol
        )


def max_step(field: TrichromaticField, omega_L: float, rates: RelaxationRates) -> float:
    scales = [field.period, 1.0 / rates.Gamma]
    if omega_L != 0.0:
        scales.append(2.0 * math.pi / abs(omega_L))
    return min(scales) / STEP_DIVISOR


class _Generator:
    """A(t) = A_free + Omega(t) G_up + conj(Omega(t)) G_down on the active elements."""

    def __init__(self, field: TrichromaticField, eps: EpsilonLike, omega_L: float, rates: RelaxationRates):
        self._field = field
        self._static = static_generator(omega_L, field.delta, rates)
        self._up, self._down = coupling_generators(eps)

    def at(self, times: np.ndarray) -> np.ndarray:
        rabi = np.asarray(total_rabi(self._field, times))[:, None, None]
        return self._static + rabi * self._up + np.conj(rabi) * self._down


def _rk4_step_matrices(generator: _Generator, t0: float, h: float, steps: int) -> np.ndarray:
    times = t0 + h * np.arange(steps)
    a_start = generator.at(times)
    a_mid = generator.at(times + 0.5 * h)
    a_end = generator.at(times + h)
    identity = np.eye(ACTIVE_COUNT, dtype=complex)

    k1 = a_start
    k2 = a_mid @ (identity + 0.5 * h * k1)
    k3 = a_mid @ (identity + 0.5 * h * k2)
    k4 = a_end @ (identity + h * k3)
    return identity + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _ordered_product(matrices: np.ndarray) -> np.ndarray:
    """M[-1] @ ... @ M[0], reduced pairwise."""
    current = matrices
    while current.shape[0] > 1:
        paired = current[1::2] @ current[0:current.shape[0] - 1:2]
        if current.shape[0] % 2:
            paired = np.concatenate([paired, current[-1:]], axis=0)
        current = paired
    return current[0]


def _initial_vector(initial_state: Optional[np.ndarray]) -> np.ndarray:
    if initial_state is None:
        return equilibrium_vector()
    vec = np.asarray(initial_state, dtype=complex)
    if vec.shape != (ACTIVE_COUNT,):
        raise InvalidParameterError(f"initial state needs {ACTIVE_COUNT} elements", parameter="initial_state")
    if abs(np.sum(vec[list(POPULATION_ELEMENTS)]) - 1.0) > 1e-12:
        raise InvalidParameterError("initial state must have unit trace", parameter="initial_state")
    return vec


def integrate_lindblad(
    field: TrichromaticField,
    eps: EpsilonLike,
    omega_L: float,
    rates: RelaxationRates,
    t_end: Optional[float] = None,
    dt: Optional[float] = None,
    *,
    initial_state: Optional[np.ndarray] = None,
    samples_per_period: int = SAMPLES_PER_PERIOD,
) -> list[DensityMatrixSnapshot]:
    """Integrate to the periodic regime; returns the snapshots of the last two periods."""
    eps = as_ellipticity(eps)
    bound = max_step(field, omega_L, rates)
    if dt is None:
        dt = bound
    if not dt > 0.0 or dt > bound * (1.0 + 1e-12):
        raise InvalidParameterError(f"step {dt!r} violates the bound {bound:.3e}", parameter="dt")
    if t_end is None:
        t_end = DEFAULT_HORIZON / rates.gamma
    if t_end < MIN_HORIZON / rates.gamma:
        raise InvalidParameterError(
            f"horizon {t_end!r} shorter than {MIN_HORIZON:g}/gamma", parameter="t_end"
        )
    if samples_per_period < 2:
        raise InvalidParameterError("need at least 2 samples per period", parameter="samples_per_period")

    rho = _initial_vector(initial_state)
    period = field.period
    steps_per_sample = math.ceil(period / dt / samples_per_period)
    h = period / (samples_per_period * steps_per_sample)
    periods = max(2, math.ceil(t_end / period - 1e-9))
    generator = _Generator(field, eps, omega_L, rates)

    sample_propagators = np.stack(
        [
            _ordered_product(_rk4_step_matrices(generator, j * steps_per_sample * h, h, steps_per_sample))
            for j in range(samples_per_period)
        ]
    )
    period_propagator = _ordered_product(sample_propagators)

    trace_start = np.sum(rho[list(POPULATION_ELEMENTS)])
    rho = np.linalg.matrix_power(period_propagator, periods - 2) @ rho

    t_start = (periods - 2) * period
    snapshots = [DensityMatrixSnapshot(t_start, rho.copy())]
    for j in range(2 * samples_per_period):
        rho = sample_propagators[j % samples_per_period] @ rho
        snapshots.append(DensityMatrixSnapshot(t_start + (j + 1) * period / samples_per_period, rho.copy()))

    drift = max(abs(snap.trace() - trace_start) for snap in snapshots)
    if drift > TRACE_TOLERANCE:
        raise IntegrationError(f"trace drifted by {drift:.3e}; integration unstable")
    periodicity = max(
        float(np.max(np.abs(snapshots[j + samples_per_period].elements - snapshots[j].elements)))
        for j in range(samples_per_period + 1)
    )
    if periodicity > PERIODICITY_TOLERANCE:
        raise IntegrationError(
            f"no periodic state after {periods} periods (change over one period {periodicity:.3e})"
        )

    logger.info(
        "oracle_integrated: omega_L=%s periods=%d steps_per_period=%d h=%.3e trace_drift=%.1e periodicity=%.1e",
        omega_L,
        periods,
        samples_per_period * steps_per_sample,
        h,
        drift,
        periodicity,
    )
    return snapshots


def final_period(snapshots: Sequence[DensityMatrixSnapshot], samples_per_period: int = SAMPLES_PER_PERIOD):
    return list(snapshots[-(samples_per_period + 1):])


def dc_extract(series: Sequence[DensityMatrixSnapshot]) -> np.ndarray:
    """Trapezoidal average over one period, both end points included."""
    if len(series) < MIN_DC_SAMPLES:
        raise InvalidParameterError(
            f"period average needs >= {MIN_DC_SAMPLES} samples, got {len(series)}", parameter="series"
        )
    times = np.array([snap.time for snap in series], dtype=float)
    spacing = np.diff(times)
    step = (times[-1] - times[0]) / (times.size - 1)
    if step <= 0.0 or np.max(np.abs(spacing - step)) > 1e-9 * max(step, abs(times[-1])):
        raise InvalidParameterError("samples must be uniformly spaced", parameter="series")
    values = np.stack([np.asarray(snap.elements, dtype=complex) for snap in series])
    return integrate.trapezoid(values, times, axis=0) / (times[-1] - times[0])


@dataclass(frozen=True)
class OracleComparison:
    omega_L: float
    oracle_dc: np.ndarray
    floquet_dc: np.ndarray
    rtol: float
    atol: float
    period_samples: tuple[DensityMatrixSnapshot, ...] = ()

    @property
    def deviations(self) -> np.ndarray:
        return np.abs(self.oracle_dc - self.floquet_dc)

    @property
    def allowed(self) -> np.ndarray:
        return np.maximum(self.atol, self.rtol * np.abs(self.floquet_dc))

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.deviations))

    @property
    def worst_ratio(self) -> float:
        return float(np.max(self.deviations / self.allowed))

    @property
    def passed(self) -> bool:
        return bool(np.all(self.deviations <= self.allowed))

    def element_report(self) -> dict[str, float]:
        return {name: float(value) for name, value in zip(ELEMENT_NAMES, self.deviations)}


def compare_with_floquet(
    field: TrichromaticField,
    eps: EpsilonLike,
    omega_L: float,
    rates: RelaxationRates,
    N: int = 2,
    *,
    horizon: float = DEFAULT_HORIZON,
    dt: Optional[float] = None,
    rtol: float = 1e-3,
    atol: float = 1e-8,
) -> OracleComparison:
    snapshots = integrate_lindblad(field, eps, omega_L, rates, t_end=horizon / rates.gamma, dt=dt)
    period = final_period(snapshots)
    oracle_dc = dc_extract(period)
    floquet_dc = solve_steady_state(assemble_system(field, eps, omega_L, rates, N)).dc()
    comparison = OracleComparison(
        omega_L=float(omega_L),
        oracle_dc=oracle_dc,
        floquet_dc=floquet_dc,
        rtol=rtol,
        atol=atol,
        period_samples=tuple(period),
    )
    logger.info(
        "oracle_compared: omega_L=%s max_deviation=%.3e worst_ratio=%.3f passed=%s",
        omega_L,
        comparison.max_deviation,
        comparison.worst_ratio,
        comparison.passed,
    )
    return comparison


def trajectory_frame(snapshots: Sequence[DensityMatrixSnapshot]) -> pd.DataFrame:
    data: dict[str, np.ndarray] = {"time": np.array([snap.time for snap in snapshots])}
    values = np.stack([snap.elements for snap in snapshots])
    for k, name in enumerate(ELEMENT_NAMES):
        data[f"re_{name}"] = values[:, k].real
        data[f"im_{name}"] = values[:, k].imag
    return pd.DataFrame(data)
