"""Harmonic-balance steady state of the periodically driven atom.

The ten active density-matrix elements are expanded in harmonics of the
modulation frequency. rho_ee is eliminated through the trace condition
(rho_ee^(n) = delta_n0 - sum of ground populations^(n)), leaving nine unknowns
per harmonic and a block-tridiagonal system Q x = R of size 9(2N+1).
"""

import logging
import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from comb_response.core.atomfield import (
    ACTIVE_COUNT,
    CONJUGATE_PARTNER,
    ELEMENT_INDEX,
    EXCITED_POPULATION,
    GROUND_POPULATION_ELEMENTS,
    POPULATION_ELEMENTS,
    EpsilonLike,
    RelaxationRates,
    TrichromaticField,
    as_ellipticity,
    commutator_superoperator,
    coupling_hamiltonian,
    dissipator_superoperator,
    free_hamiltonian,
    restrict,
)
from comb_response.core.errors import InvalidParameterError, SolverFailure

logger = logging.getLogger(__name__)

UNKNOWNS_PER_HARMONIC = ACTIVE_COUNT - 1
PIVOT_FLOOR = 1e-13

# Active elements kept as unknowns; rho_ee is reconstructed from the trace.
_KEPT = tuple(k for k in range(ACTIVE_COUNT) if k != EXCITED_POPULATION)
_KEPT_GROUND_POPULATIONS = tuple(_KEPT.index(k) for k in GROUND_POPULATION_ELEMENTS)


@dataclass(frozen=True)
class HarmonicBlocks:
    """Omega_L-independent pieces of the restricted generator, split by harmonic."""

    static: np.ndarray
    larmor: np.ndarray
    raising: np.ndarray
    lowering: np.ndarray
    omega_m: float

    def generator(self, omega_L: float) -> np.ndarray:
        return self.static + omega_L * self.larmor


def harmonic_blocks(field: TrichromaticField, eps: EpsilonLike, rates: RelaxationRates) -> HarmonicBlocks:
    eps = as_ellipticity(eps)
    comps = field.components()
    a0, a_up, a_down = comps[0], comps[1], comps[-1]

    static = commutator_superoperator(free_hamiltonian(0.0, field.delta))
    static = static + dissipator_superoperator(rates)
    static = static + commutator_superoperator(coupling_hamiltonian(eps, a0, np.conj(a0)))
    larmor = commutator_superoperator(free_hamiltonian(1.0, 0.0))
    raising = commutator_superoperator(coupling_hamiltonian(eps, a_up, np.conj(a_down)))
    lowering = commutator_superoperator(coupling_hamiltonian(eps, a_down, np.conj(a_up)))
    return HarmonicBlocks(
        static=restrict(static),
        larmor=restrict(larmor),
        raising=restrict(raising),
        lowering=restrict(lowering),
        omega_m=field.omega_m,
    )


def _reduce(block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Substitute the trace condition; returns the 9x9 block and the rho_ee source column."""
    kept = np.asarray(_KEPT)
    ee_column = block[kept, EXCITED_POPULATION]
    reduced = block[np.ix_(kept, kept)].copy()
    for position in _KEPT_GROUND_POPULATIONS:
        reduced[:, position] -= ee_column
    return reduced, ee_column.copy()


@dataclass(frozen=True)
class SystemMatrix:
    Q: np.ndarray
    R: np.ndarray
    order: int
    omega_m: float

    def __post_init__(self) -> None:
        if int(self.order) != self.order or self.order < 1:
            raise InvalidParameterError("truncation order must be an integer >= 1", parameter="order")
        size = UNKNOWNS_PER_HARMONIC * (2 * self.order + 1)
        if self.Q.shape != (size, size) or self.R.shape != (size,):
            raise InvalidParameterError(
                f"system of order {self.order} needs Q {size}x{size} and R of length {size}",
                parameter="Q",
            )
        if not (np.all(np.isfinite(self.Q)) and np.all(np.isfinite(self.R))):
            raise InvalidParameterError("system contains non-finite entries", parameter="Q")

    @property
    def dimension(self) -> int:
        return self.Q.shape[0]


def assemble_from_blocks(blocks: HarmonicBlocks, omega_L: float, order: int) -> SystemMatrix:
    if int(order) != order or order < 1:
        raise InvalidParameterError("truncation order must be an integer >= 1", parameter="order")
    order = int(order)
    width = UNKNOWNS_PER_HARMONIC
    size = width * (2 * order + 1)

    diagonal, source_0 = _reduce(blocks.generator(omega_L))
    raising, source_up = _reduce(blocks.raising)
    lowering, source_down = _reduce(blocks.lowering)
    identity = np.eye(width, dtype=complex)

    Q = np.zeros((size, size), dtype=complex)
    R = np.zeros(size, dtype=complex)
    for n in range(-order, order + 1):
        row = (n + order) * width
        Q[row:row + width, row:row + width] = diagonal - 1j * n * blocks.omega_m * identity
        if n > -order:
            Q[row:row + width, row - width:row] = raising
        if n < order:
            Q[row:row + width, row + width:row + 2 * width] = lowering
    # rho_ee^(0) = 1 enters harmonic 0 directly and harmonics +-1 through the sidebands.
    R[order * width:(order + 1) * width] = -source_0
    R[(order + 1) * width:(order + 2) * width] = -source_up
    R[(order - 1) * width:order * width] = -source_down
    return SystemMatrix(Q=Q, R=R, order=order, omega_m=blocks.omega_m)


def assemble_system(
    field: TrichromaticField,
    eps: EpsilonLike,
    omega_L: float,
    rates: RelaxationRates,
    N: int = 2,
) -> SystemMatrix:
    if not math.isfinite(float(omega_L)):
        raise InvalidParameterError("omega_L must be finite", parameter="omega_L")
    return assemble_from_blocks(harmonic_blocks(field, eps, rates), float(omega_L), N)


def gaussian_solve(matrix: np.ndarray, rhs: np.ndarray, *, pivot_floor: float = PIVOT_FLOOR) -> np.ndarray:
    """Dense complex elimination with partial pivoting.

    A pivot at or below ``pivot_floor`` times the largest |Q_ij| raises
    SolverFailure carrying the elimination step.
    """
    a = np.array(matrix, dtype=complex, copy=True)
    b = np.array(rhs, dtype=complex, copy=True)
    size = a.shape[0]
    if a.ndim != 2 or a.shape != (size, size) or b.shape != (size,):
        raise InvalidParameterError("solver needs a square matrix and a matching vector", parameter="Q")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InvalidParameterError("solver input contains non-finite entries", parameter="Q")

    floor = pivot_floor * float(np.max(np.abs(a))) if size else 0.0
    for k in range(size):
        pivot_row = k + int(np.argmax(np.abs(a[k:, k])))
        pivot = a[pivot_row, k]
        if pivot == 0 or abs(pivot) <= floor:
            raise SolverFailure(
                f"near-singular pivot |{abs(pivot):.3e}| at elimination step {k}",
                pivot_index=k,
            )
        if pivot_row != k:
            a[[k, pivot_row]] = a[[pivot_row, k]]
            b[[k, pivot_row]] = b[[pivot_row, k]]
        factors = a[k + 1:, k] / pivot
        a[k + 1:, k:] -= np.outer(factors, a[k, k:])
        b[k + 1:] -= factors * b[k]

    x = np.zeros(size, dtype=complex)
    for k in range(size - 1, -1, -1):
        x[k] = (b[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x


@dataclass(frozen=True)
class HarmonicState:
    order: int
    omega_m: float
    coefficients: np.ndarray
    solution: np.ndarray = dataclass_field(repr=False)
    residual: float = 0.0

    def _row(self, n: int) -> int:
        if abs(n) > self.order:
            raise InvalidParameterError(f"harmonic {n} beyond order {self.order}", parameter="n")
        return n + self.order

    def harmonic(self, n: int) -> np.ndarray:
        return self.coefficients[self._row(n)].copy()

    def dc(self) -> np.ndarray:
        return self.harmonic(0)

    def element(self, name: str, n: int = 0) -> complex:
        return complex(self.coefficients[self._row(n), ELEMENT_INDEX[name]])

    def trace(self, n: int = 0) -> complex:
        return complex(np.sum(self.coefficients[self._row(n), list(POPULATION_ELEMENTS)]))

    def hermiticity_error(self) -> float:
        mirrored = np.conj(self.coefficients[::-1, list(CONJUGATE_PARTNER)])
        return float(np.max(np.abs(self.coefficients - mirrored)))

    def reconstruct(self, t):
        """rho(t) as active-element vectors; a 1-D ``t`` gives one row per time."""
        harmonics = np.arange(-self.order, self.order + 1)
        times = np.atleast_1d(np.asarray(t, dtype=float))
        phases = np.exp(1j * self.omega_m * np.outer(times, harmonics))
        values = phases @ self.coefficients
        return values[0] if np.ndim(t) == 0 else values


def solve_steady_state(system: SystemMatrix) -> HarmonicState:
    x = gaussian_solve(system.Q, system.R)
    residual_vector = system.Q @ x - system.R
    residual = float(np.max(np.abs(residual_vector))) / max(1.0, float(np.max(np.abs(system.R))))

    order = system.order
    reduced = x.reshape(2 * order + 1, UNKNOWNS_PER_HARMONIC)
    coefficients = np.zeros((2 * order + 1, ACTIVE_COUNT), dtype=complex)
    coefficients[:, list(_KEPT)] = reduced
    coefficients[:, EXCITED_POPULATION] = -np.sum(reduced[:, list(_KEPT_GROUND_POPULATIONS)], axis=1)
    coefficients[order, EXCITED_POPULATION] += 1.0

    logger.debug("steady_state_solved: order=%d dim=%d residual=%.3e", order, system.dimension, residual)
    return HarmonicState(
        order=order,
        omega_m=system.omega_m,
        coefficients=coefficients,
        solution=x,
        residual=residual,
    )


@dataclass(frozen=True)
class TruncationReport:
    order: int
    tolerance: float
    max_relative_difference: float
    passed: bool
    response_low: object
    response_high: object


def truncation_check(
    field: TrichromaticField,
    eps: EpsilonLike,
    omega_L: float,
    rates: RelaxationRates,
    N: int = 2,
    tol: float = 1e-6,
) -> TruncationReport:
    """Compare the DC observables at orders N and N+1."""
    from comb_response.core.observables import observables_from_state

    blocks = harmonic_blocks(field, eps, rates)
    low = observables_from_state(solve_steady_state(assemble_from_blocks(blocks, omega_L, N)), eps, field)
    high = observables_from_state(solve_steady_state(assemble_from_blocks(blocks, omega_L, N + 1)), eps, field)

    a = np.array(low.as_tuple())
    b = np.array(high.as_tuple())
    numerator = float(np.max(np.abs(a - b)))
    denominator = float(np.max(np.abs(b)))
    if denominator == 0.0:
        difference = 0.0 if numerator == 0.0 else math.inf
    else:
        difference = numerator / denominator
    passed = difference < tol
    logger.info(
        "truncation_check: order=%d omega_L=%s max_relative_difference=%.3e tol=%.1e passed=%s",
        N,
        omega_L,
        difference,
        tol,
        passed,
    )
    return TruncationReport(
        order=int(N),
        tolerance=float(tol),
        max_relative_difference=difference,
        passed=passed,
        response_low=low,
        response_high=high,
    )
