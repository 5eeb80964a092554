"""Frequency-modulated comb: Bessel teeth, phase classes and the Doppler window."""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import special

from comb_response.core.atomfield import TrichromaticField
from comb_response.core.errors import InvalidParameterError, MissingToothError

logger = logging.getLogger(__name__)

MAX_BESSEL_ARGUMENT = 1.0e4
MAX_BESSEL_ORDER = 20_000
DEGENERATE_THRESHOLD = 1e-14


class PhaseClass(str, Enum):
    center_like = "CenterLike"
    wing_like = "WingLike"
    degenerate = "Degenerate"


@dataclass(frozen=True)
class Tooth:
    n: int
    amplitude: float
    sign: int


@dataclass(frozen=True)
class CombSpectrum:
    omega_m: float
    mod_index: float
    teeth: tuple[Tooth, ...]

    @cached_property
    def _by_index(self) -> dict[int, Tooth]:
        return {tooth.n: tooth for tooth in self.teeth}

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(tooth.n for tooth in self.teeth)

    @cached_property
    def max_amplitude(self) -> float:
        return max((tooth.amplitude for tooth in self.teeth), default=0.0)

    @property
    def total_power(self) -> float:
        return math.fsum(tooth.amplitude for tooth in self.teeth)

    def __contains__(self, n: int) -> bool:
        return n in self._by_index

    def __len__(self) -> int:
        return len(self.teeth)

    def tooth(self, n: int) -> Tooth:
        try:
            return self._by_index[n]
        except KeyError:
            raise MissingToothError(f"tooth {n} is not part of the spectrum", parameter="n") from None

    def frequency_offset(self, n: int) -> float:
        return n * self.omega_m

    def with_global_sign(self, sign: int) -> "CombSpectrum":
        flip = -1 if sign < 0 else 1
        return replace(self, teeth=tuple(replace(t, sign=t.sign * flip) for t in self.teeth))


@dataclass(frozen=True)
class DopplerWindow:
    delta_laser: float
    width: float

    def __post_init__(self) -> None:
        if not math.isfinite(float(self.width)) or float(self.width) <= 0.0:
            raise InvalidParameterError("Doppler width must be > 0", parameter="doppler_width")
        if not math.isfinite(float(self.delta_laser)):
            raise InvalidParameterError("laser detuning must be finite", parameter="laser_detuning")


def _check_bessel_range(n_abs: int, x: float) -> None:
    if not math.isfinite(x) or x < 0.0 or x > MAX_BESSEL_ARGUMENT:
        raise InvalidParameterError(
            f"Bessel argument {x!r} outside [0, {MAX_BESSEL_ARGUMENT:g}]", parameter="x"
        )
    if n_abs > MAX_BESSEL_ORDER:
        raise InvalidParameterError(
            f"Bessel order {n_abs} exceeds {MAX_BESSEL_ORDER}", parameter="n"
        )


def _bessel_values(orders: np.ndarray, x: float) -> np.ndarray:
    orders = np.asarray(orders, dtype=int)
    magnitude = np.abs(orders)
    values = special.jv(magnitude.astype(float), x)
    # J_{-n} = (-1)^n J_n, applied exactly rather than through the negative order.
    parity = np.where((orders < 0) & (magnitude % 2 == 1), -1.0, 1.0)
    return parity * values


def bessel_j(n: int, x: float) -> float:
    if isinstance(n, bool) or int(n) != n:
        raise InvalidParameterError(f"Bessel order must be an integer, got {n!r}", parameter="n")
    n = int(n)
    x = float(x)
    _check_bessel_range(abs(n), x)
    return float(_bessel_values(np.array([n]), x)[0])


def teeth_spectrum(omega_m: float, A_m: float, n_max: int) -> CombSpectrum:
    omega_m = float(omega_m)
    A_m = float(A_m)
    if not math.isfinite(omega_m) or omega_m <= 0.0:
        raise InvalidParameterError("omega_m must be > 0", parameter="omega_m")
    if not math.isfinite(A_m) or A_m < 0.0:
        raise InvalidParameterError("modulation amplitude must be >= 0", parameter="mod_amplitude")
    if int(n_max) != n_max or n_max < 0:
        raise InvalidParameterError("n_max must be a non-negative integer", parameter="teeth")
    n_max = int(n_max)
    mod_index = A_m / omega_m
    if mod_index > MAX_BESSEL_ARGUMENT:
        raise InvalidParameterError(
            f"modulation index {mod_index:g} beyond supported {MAX_BESSEL_ARGUMENT:g}",
            parameter="mod_amplitude",
        )
    _check_bessel_range(n_max, mod_index)

    orders = np.arange(-n_max, n_max + 1)
    # Tooth n sits at +n*omega_m and carries J_{-n}.
    values = _bessel_values(-orders, mod_index)
    amplitudes = values * values
    signs = np.where(values < 0.0, -1, 1)
    teeth = tuple(
        Tooth(int(n), float(a), int(s)) for n, a, s in zip(orders, amplitudes, signs)
    )
    logger.debug(
        "teeth_spectrum: omega_m=%s mod_index=%s n_max=%d power=%.6f",
        omega_m,
        mod_index,
        n_max,
        float(np.sum(amplitudes)),
    )
    return CombSpectrum(omega_m=omega_m, mod_index=mod_index, teeth=teeth)


def classify_phase_triple(
    spectrum: CombSpectrum,
    n_center: int,
    *,
    zero_threshold: float = DEGENERATE_THRESHOLD,
) -> PhaseClass:
    lower = spectrum.tooth(n_center - 1)
    spectrum.tooth(n_center)  # must exist even though its sign is irrelevant
    upper = spectrum.tooth(n_center + 1)

    floor = zero_threshold * spectrum.max_amplitude
    if min(lower.amplitude, upper.amplitude) <= floor:
        return PhaseClass.degenerate
    if lower.sign == upper.sign:
        return PhaseClass.wing_like
    return PhaseClass.center_like


def phase_class_map(spectrum: CombSpectrum, *, zero_threshold: float = DEGENERATE_THRESHOLD) -> dict[int, PhaseClass]:
    indices = spectrum.indices
    if len(indices) < 3:
        return {}
    return {
        n: classify_phase_triple(spectrum, n, zero_threshold=zero_threshold)
        for n in indices[1:-1]
    }


def doppler_window(spectrum: CombSpectrum, window: DopplerWindow) -> CombSpectrum:
    half_width = 0.5 * float(window.width)
    kept = tuple(
        tooth
        for tooth in spectrum.teeth
        if abs(tooth.n * spectrum.omega_m - window.delta_laser) <= half_width
    )
    return replace(spectrum, teeth=kept)


def tooth_for_detuning(spectrum: CombSpectrum, delta_laser: float) -> Tooth:
    return spectrum.tooth(int(round(float(delta_laser) / spectrum.omega_m)))


def field_from_teeth(
    spectrum: CombSpectrum,
    n_center: int,
    *,
    rabi_scale: float = 5.0,
    delta: float = 0.0,
    reference_sign: Optional[int] = None,
) -> TrichromaticField:
    """Trichromatic field built from three consecutive teeth.

    The strongest of the three gets ``rabi_scale``; the others scale with |J|.
    A tooth gets phase 0 when its sign matches ``reference_sign`` (default: the
    sign of the comb's n=0 tooth) and pi otherwise.
    """
    lower = spectrum.tooth(n_center - 1)
    center = spectrum.tooth(n_center)
    upper = spectrum.tooth(n_center + 1)
    if reference_sign is None:
        reference_sign = spectrum.tooth(0).sign if 0 in spectrum else 1

    magnitudes = [math.sqrt(t.amplitude) for t in (lower, center, upper)]
    peak = max(magnitudes)
    if peak == 0.0:
        raise InvalidParameterError(f"teeth around {n_center} are all dark", parameter="n_center")
    rabi_lower, rabi_center, rabi_upper = (rabi_scale * m / peak for m in magnitudes)

    def _phase(tooth: Tooth) -> float:
        return 0.0 if tooth.sign == reference_sign else math.pi

    return TrichromaticField(
        rabi_0=rabi_center,
        rabi_minus=rabi_lower,
        rabi_plus=rabi_upper,
        phi_1=_phase(center),
        phi_2=_phase(lower),
        phi_3=_phase(upper),
        omega_m=spectrum.omega_m,
        delta=delta,
    )
