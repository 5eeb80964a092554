import math

import numpy as np
import pytest

from comb_response.core import comb
from comb_response.core.comb import (
    DopplerWindow,
    PhaseClass,
    bessel_j,
    classify_phase_triple,
    doppler_window,
    field_from_teeth,
    phase_class_map,
    teeth_spectrum,
    tooth_for_detuning,
)
from comb_response.core.errors import InvalidParameterError, MissingToothError

pytestmark = pytest.mark.unit


def _series_bessel(n: int, x: float) -> float:
    return sum(
        (-1) ** k * (x / 2.0) ** (2 * k + n) / (math.factorial(k) * math.factorial(k + n))
        for k in range(40)
    )


def test_bessel_examples():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0
    assert bessel_j(-3, 2.0) == pytest.approx(-bessel_j(3, 2.0))
    assert abs(bessel_j(0, 2.404825557695773)) < 1e-8


@pytest.mark.parametrize("n", [0, 1, 2, 5, 10])
@pytest.mark.parametrize("x", [0.3, 1.0, 2.5, 5.0])
def test_bessel_matches_power_series(n, x):
    assert bessel_j(n, x) == pytest.approx(_series_bessel(n, x), abs=1e-10)


def test_bessel_parity_is_exact():
    for x in (0.0, 0.5, 2.0, 10.0, 50.0, 200.0):
        for n in range(-30, 31):
            assert bessel_j(-n, x) == (-1) ** (n % 2) * bessel_j(n, x)


def test_bessel_recurrence():
    for x in (0.5, 2.0, 10.0, 50.0):
        for n in range(1, 41):
            lhs = bessel_j(n - 1, x) + bessel_j(n + 1, x)
            assert lhs == pytest.approx(2.0 * n / x * bessel_j(n, x), abs=1e-9)


@pytest.mark.parametrize(
    "n, x",
    [(0, 2.0e4), (comb.MAX_BESSEL_ORDER + 1, 1.0), (0, -1.0), (1.5, 1.0)],
)
def test_bessel_rejects_out_of_range(n, x):
    with pytest.raises(InvalidParameterError):
        bessel_j(n, x)


def test_unmodulated_comb_is_a_single_tooth():
    spectrum = teeth_spectrum(12.0, 0.0, 5)
    assert spectrum.mod_index == 0.0
    assert len(spectrum) == 11
    assert spectrum.tooth(0).amplitude == 1.0
    assert spectrum.tooth(0).sign == 1
    assert all(spectrum.tooth(n).amplitude == 0.0 for n in spectrum.indices if n != 0)


def test_teeth_amplitudes_are_symmetric():
    spectrum = teeth_spectrum(12.0, 24.0, 10)
    assert spectrum.mod_index == 2.0
    for n in range(1, 11):
        assert spectrum.tooth(n).amplitude == spectrum.tooth(-n).amplitude


def test_teeth_signs_follow_parity():
    spectrum = teeth_spectrum(12.0, 24.0, 10)
    assert spectrum.tooth(-1).sign == -spectrum.tooth(1).sign
    for n in range(1, 11):
        if spectrum.tooth(n).amplitude > 0.0:
            expected = spectrum.tooth(n).sign * (-1) ** (n % 2)
            assert spectrum.tooth(-n).sign == expected


def test_teeth_power_is_normalised_when_enough_teeth():
    spectrum = teeth_spectrum(12.0, 600.0, 70)
    assert spectrum.mod_index == pytest.approx(50.0)
    assert spectrum.total_power >= 0.999


@pytest.mark.parametrize("omega_m, A_m, n_max", [(0.0, 1.0, 3), (12.0, -1.0, 3), (12.0, 1.0, -1)])
def test_teeth_spectrum_rejects_invalid_input(omega_m, A_m, n_max):
    with pytest.raises(InvalidParameterError):
        teeth_spectrum(omega_m, A_m, n_max)


@pytest.fixture
def deep_comb():
    # Modulation index 50.
    return teeth_spectrum(12.0, 600.0, 60)


def test_classification_at_line_center_and_far_wing(deep_comb):
    assert classify_phase_triple(deep_comb, 0) is PhaseClass.center_like
    assert classify_phase_triple(deep_comb, 55) is PhaseClass.wing_like


def test_classification_of_unmodulated_comb_is_degenerate():
    assert classify_phase_triple(teeth_spectrum(12.0, 0.0, 5), 0) is PhaseClass.degenerate


def test_classification_ignores_global_sign(deep_comb):
    flipped = deep_comb.with_global_sign(-1)
    assert phase_class_map(flipped) == phase_class_map(deep_comb)


def test_classification_needs_neighbours(deep_comb):
    with pytest.raises(MissingToothError):
        classify_phase_triple(deep_comb, 60)


def test_doppler_window_near_resonance():
    spectrum = teeth_spectrum(12.0, 24.0, 10)
    kept = doppler_window(spectrum, DopplerWindow(delta_laser=0.0, width=24.0))
    assert kept.indices == (-1, 0, 1)


def test_doppler_window_far_detuned():
    spectrum = teeth_spectrum(12.0, 24.0, 11700)
    kept = doppler_window(spectrum, DopplerWindow(delta_laser=140000.0, width=24.0))
    assert set(kept.indices) == {11666, 11667}


def test_doppler_window_can_be_empty():
    spectrum = teeth_spectrum(12.0, 24.0, 10)
    assert len(doppler_window(spectrum, DopplerWindow(delta_laser=6.0, width=6.0))) == 0


def test_doppler_window_rejects_non_positive_width():
    with pytest.raises(InvalidParameterError):
        DopplerWindow(delta_laser=0.0, width=0.0)


def test_tooth_for_detuning_rounds_to_nearest():
    spectrum = teeth_spectrum(12.0, 24.0, 11700)
    assert tooth_for_detuning(spectrum, 140000.0).n == 11667
    assert tooth_for_detuning(spectrum, 5.0).n == 0


def test_field_from_far_wing_teeth_has_equal_sidebands(deep_comb):
    field = field_from_teeth(deep_comb, 55, reference_sign=1)
    # Tooth 55 carries an odd order, so only the central phase flips.
    assert field.phases == (math.pi, 0.0, 0.0)
    assert max(field.rabi_0, field.rabi_minus, field.rabi_plus) == pytest.approx(5.0)


def test_field_from_center_teeth_has_one_flipped_sideband(deep_comb):
    field = field_from_teeth(deep_comb, 0, reference_sign=deep_comb.tooth(0).sign)
    assert field.phi_1 == 0.0
    assert sorted((field.phi_2, field.phi_3)) == [0.0, math.pi]
    assert np.isclose(field.rabi_minus, field.rabi_plus)
