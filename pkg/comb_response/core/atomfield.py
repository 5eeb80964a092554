"""Level scheme, trichromatic field and relaxation rates of the J=1 -> J'=0 atom.

Also holds the Liouville-space operators shared by the harmonic-balance solver
and the time-domain integrator. Density matrices are vectorised row-major, so
``vec(A @ rho @ B) == kron(A, B.T) @ vec(rho)``.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from comb_response.core.errors import InvalidParameterError

# Level indices of the 4x4 density matrix.
LOWER = 0  # m = -1, sigma+ branch
UPPER = 1  # m = +1, sigma- branch
UNCOUPLED = 2  # m = 0
EXCITED = 3  # m' = 0

LEVEL_COUNT = 4
GROUND_LEVELS = (LOWER, UPPER, UNCOUPLED)
MAGNETIC_NUMBER = {LOWER: -1, UPPER: 1, UNCOUPLED: 0}

ACTIVE_ELEMENTS: tuple[tuple[int, int], ...] = (
    (LOWER, LOWER),
    (UPPER, UPPER),
    (UNCOUPLED, UNCOUPLED),
    (EXCITED, EXCITED),
    (LOWER, UPPER),
    (UPPER, LOWER),
    (LOWER, EXCITED),
    (EXCITED, LOWER),
    (UPPER, EXCITED),
    (EXCITED, UPPER),
)
ELEMENT_NAMES: tuple[str, ...] = (
    "rho_mm",
    "rho_pp",
    "rho_00",
    "rho_ee",
    "rho_mp",
    "rho_pm",
    "rho_me",
    "rho_em",
    "rho_pe",
    "rho_ep",
)
ELEMENT_INDEX = {name: k for k, name in enumerate(ELEMENT_NAMES)}
POPULATION_ELEMENTS = (0, 1, 2, 3)
GROUND_POPULATION_ELEMENTS = (0, 1, 2)
EXCITED_POPULATION = 3
ACTIVE_COUNT = len(ACTIVE_ELEMENTS)

# Element k and CONJUGATE_PARTNER[k] hold (j, l) and (l, j).
CONJUGATE_PARTNER = (0, 1, 2, 3, 5, 4, 7, 6, 9, 8)

_ACTIVE_VEC = np.array([row * LEVEL_COUNT + col for row, col in ACTIVE_ELEMENTS], dtype=int)

_PHASE_TOLERANCE = 1e-12
_EPSILON_LIMIT = math.pi / 4


class LevelScheme:
    """Fixed J=1 -> J'=0 structure; only m = -1 and m = +1 couple to the excited level."""

    ground = GROUND_LEVELS
    coupled = (LOWER, UPPER)
    uncoupled = UNCOUPLED
    excited = EXCITED

    @staticmethod
    def branch_of(level: int) -> int:
        """Branch index of a coupled sublevel: +1 for sigma+ (m=-1), -1 for sigma- (m=+1)."""
        if level == LOWER:
            return 1
        if level == UPPER:
            return -1
        raise InvalidParameterError(f"level {level} carries no optical coupling", parameter="level")


@dataclass(frozen=True)
class EllipticityAngle:
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        value = float(self.epsilon)
        if not math.isfinite(value) or abs(value) > _EPSILON_LIMIT + 1e-12:
            raise InvalidParameterError(
                f"ellipticity {value!r} outside [-pi/4, pi/4]", parameter="epsilon"
            )
        object.__setattr__(self, "epsilon", value)

    @classmethod
    def from_qwp_angle(cls, theta: float) -> "EllipticityAngle":
        # Wave-plate angle and ellipticity are used interchangeably.
        return cls(theta)

    @property
    def is_linear(self) -> bool:
        return self.epsilon == 0.0

    def reversed(self) -> "EllipticityAngle":
        return EllipticityAngle(-self.epsilon)


EpsilonLike = Union[EllipticityAngle, float, int]


def as_ellipticity(eps: EpsilonLike) -> EllipticityAngle:
    if isinstance(eps, EllipticityAngle):
        return eps
    return EllipticityAngle(float(eps))


def normalize_phase(value: float, *, parameter: str = "phase") -> float:
    """Snap a phase onto exactly 0 or pi; anything else is rejected."""
    phase = float(value)
    if abs(phase) <= _PHASE_TOLERANCE:
        return 0.0
    if abs(abs(phase) - math.pi) <= _PHASE_TOLERANCE:
        return math.pi
    raise InvalidParameterError(f"phase {value!r} must be 0 or pi", parameter=parameter)


def phase_sign(phase: float) -> float:
    return 1.0 if phase == 0.0 else -1.0


@dataclass(frozen=True)
class TrichromaticField:
    rabi_0: float
    rabi_minus: float
    rabi_plus: float
    phi_1: float = 0.0
    phi_2: float = 0.0
    phi_3: float = 0.0
    omega_m: float = 12.0
    delta: float = 0.0

    def __post_init__(self) -> None:
        for name in ("rabi_0", "rabi_minus", "rabi_plus"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value < 0.0:
                raise InvalidParameterError(f"{name} must be a finite value >= 0", parameter=name)
            object.__setattr__(self, name, value)
        for name in ("phi_1", "phi_2", "phi_3"):
            object.__setattr__(self, name, normalize_phase(getattr(self, name), parameter=name))
        omega_m = float(self.omega_m)
        if not math.isfinite(omega_m) or omega_m <= 0.0:
            raise InvalidParameterError("omega_m must be > 0", parameter="omega_m")
        object.__setattr__(self, "omega_m", omega_m)
        delta = float(self.delta)
        if not math.isfinite(delta):
            raise InvalidParameterError("delta must be finite", parameter="delta")
        object.__setattr__(self, "delta", delta)

    @classmethod
    def with_preset(
        cls,
        region: "PhaseRegion",
        *,
        rabi: tuple[float, float, float] = (5.0, 5.0, 5.0),
        omega_m: float = 12.0,
        delta: float = 0.0,
    ) -> "TrichromaticField":
        phi_1, phi_2, phi_3 = phase_preset(region)
        return cls(rabi[0], rabi[1], rabi[2], phi_1, phi_2, phi_3, omega_m, delta)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega_m

    @property
    def phases(self) -> tuple[float, float, float]:
        return self.phi_1, self.phi_2, self.phi_3

    @property
    def is_dark(self) -> bool:
        return self.rabi_0 == 0.0 and self.rabi_minus == 0.0 and self.rabi_plus == 0.0

    def components(self) -> dict[int, complex]:
        """Complex amplitude multiplying exp(i*k*omega_m*t) in the total Rabi frequency."""
        return {
            0: complex(phase_sign(self.phi_1) * self.rabi_0),
            1: complex(phase_sign(self.phi_2) * self.rabi_minus),
            -1: complex(phase_sign(self.phi_3) * self.rabi_plus),
        }

    def reference_rabi(self) -> float:
        if self.rabi_0 > 0.0:
            return self.rabi_0
        return max(self.rabi_minus, self.rabi_plus)


@dataclass(frozen=True)
class RelaxationRates:
    Gamma: float = 5600.0
    gamma: float = 1.0

    def __post_init__(self) -> None:
        for name in ("Gamma", "gamma"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value <= 0.0:
                raise InvalidParameterError(f"{name} must be > 0", parameter=name)
            object.__setattr__(self, name, value)


class PhaseRegion(str, Enum):
    center = "center"
    wing = "wing"


_PRESET_ALIASES = {
    "center": PhaseRegion.center,
    "centerlike": PhaseRegion.center,
    "wing": PhaseRegion.wing,
    "winglike": PhaseRegion.wing,
}


def parse_phase_region(value: Union[str, PhaseRegion]) -> PhaseRegion:
    if isinstance(value, PhaseRegion):
        return value
    key = str(value or "").strip().lower().replace("-", "").replace("_", "")
    try:
        return _PRESET_ALIASES[key]
    except KeyError:
        raise InvalidParameterError(f"unknown phase preset {value!r}", parameter="phase_preset") from None


def phase_preset(region: Union[str, PhaseRegion]) -> tuple[float, float, float]:
    """(phi_1, phi_2, phi_3) for a comb region.

    The triple is read lower, central, upper tooth, i.e. (phi_2, phi_1, phi_3):
    the center class has opposite outer teeth (+,+,-), the wing class equal
    outer teeth (+,+,+).
    """
    region = parse_phase_region(region)
    if region is PhaseRegion.center:
        return 0.0, 0.0, math.pi
    return 0.0, 0.0, 0.0


def coupling_amplitude(eps: EpsilonLike, g: int) -> float:
    if g not in (-1, 1) or isinstance(g, bool):
        raise InvalidParameterError(f"sublevel index must be -1 or +1, got {g!r}", parameter="g")
    epsilon = as_ellipticity(eps).epsilon
    return math.cos(epsilon) + g * math.sin(epsilon)


def branch_coupling(eps: EpsilonLike, level: int) -> float:
    """Signed coupling factor of a ground sublevel as it enters the Hamiltonian.

    The sigma- branch carries the relative minus sign of the field's spherical
    decomposition: kappa(m=-1) = cos + sin, kappa(m=+1) = sin - cos.
    """
    branch = LevelScheme.branch_of(level)
    amplitude = coupling_amplitude(eps, branch)
    return amplitude if branch == 1 else -amplitude


def total_rabi(field: TrichromaticField, t):
    """Total Rabi frequency at time(s) ``t``; accepts scalars or numpy arrays."""
    comps = field.components()
    phase = np.exp(1j * field.omega_m * np.asarray(t, dtype=float))
    value = comps[0] + comps[1] * phase + comps[-1] * np.conj(phase)
    if np.ndim(value) == 0:
        return complex(value)
    return value


def free_hamiltonian(omega_L: float, delta: float) -> np.ndarray:
    h = np.zeros((LEVEL_COUNT, LEVEL_COUNT), dtype=complex)
    for level, m in MAGNETIC_NUMBER.items():
        h[level, level] = m * omega_L
    h[EXCITED, EXCITED] = -delta
    return h


def coupling_hamiltonian(eps: EpsilonLike, upper: complex, lower: complex) -> np.ndarray:
    """Optical coupling with ``upper`` on the ground-excited entries and ``lower`` on excited-ground."""
    h = np.zeros((LEVEL_COUNT, LEVEL_COUNT), dtype=complex)
    for level in (LOWER, UPPER):
        kappa = branch_coupling(eps, level)
        h[level, EXCITED] = kappa * upper
        h[EXCITED, level] = kappa * lower
    return h


def commutator_superoperator(h: np.ndarray) -> np.ndarray:
    identity = np.eye(h.shape[0], dtype=complex)
    return -1j * (np.kron(h, identity) - np.kron(identity, h.T))


def jump_operators(rates: RelaxationRates) -> list[np.ndarray]:
    jumps = []
    decay = math.sqrt(rates.Gamma / 3.0)
    for ground in GROUND_LEVELS:
        op = np.zeros((LEVEL_COUNT, LEVEL_COUNT), dtype=complex)
        op[ground, EXCITED] = decay
        jumps.append(op)
    redistribution = math.sqrt(rates.gamma)
    for source in GROUND_LEVELS:
        for target in GROUND_LEVELS:
            if source == target:
                continue
            op = np.zeros((LEVEL_COUNT, LEVEL_COUNT), dtype=complex)
            op[target, source] = redistribution
            jumps.append(op)
    return jumps


def dissipator_superoperator(rates: RelaxationRates) -> np.ndarray:
    identity = np.eye(LEVEL_COUNT, dtype=complex)
    superop = np.zeros((LEVEL_COUNT**2, LEVEL_COUNT**2), dtype=complex)
    for op in jump_operators(rates):
        decay = op.conj().T @ op
        superop += np.kron(op, op.conj())
        superop -= 0.5 * (np.kron(decay, identity) + np.kron(identity, decay.T))
    return superop


def restrict(superop: np.ndarray) -> np.ndarray:
    """Project a 16x16 superoperator onto the ten elements the light can reach."""
    return superop[np.ix_(_ACTIVE_VEC, _ACTIVE_VEC)]


def static_generator(omega_L: float, delta: float, rates: RelaxationRates) -> np.ndarray:
    """Field-free part of the restricted generator: Larmor precession, detuning and relaxation."""
    return restrict(commutator_superoperator(free_hamiltonian(omega_L, delta)) + dissipator_superoperator(rates))


def coupling_generators(eps: EpsilonLike) -> tuple[np.ndarray, np.ndarray]:
    """Restricted generators multiplying Omega(t) and conj(Omega(t))."""
    g_up = restrict(commutator_superoperator(coupling_hamiltonian(eps, 1.0, 0.0)))
    g_down = restrict(commutator_superoperator(coupling_hamiltonian(eps, 0.0, 1.0)))
    return g_up, g_down


def equilibrium_vector() -> np.ndarray:
    """Light-free steady state: equal ground populations, nothing else."""
    vec = np.zeros(ACTIVE_COUNT, dtype=complex)
    vec[list(GROUND_POPULATION_ELEMENTS)] = 1.0 / 3.0
    return vec


def matrix_from_vector(vec: np.ndarray) -> np.ndarray:
    rho = np.zeros((LEVEL_COUNT, LEVEL_COUNT), dtype=complex)
    for k, (row, col) in enumerate(ACTIVE_ELEMENTS):
        rho[row, col] = vec[k]
    return rho


def vector_from_matrix(rho: np.ndarray) -> np.ndarray:
    return np.array([rho[row, col] for row, col in ACTIVE_ELEMENTS], dtype=complex)
