import math

import numpy as np
import pytest

from comb_response.core import atomfield
from comb_response.core.atomfield import (
    EllipticityAngle,
    PhaseRegion,
    RelaxationRates,
    TrichromaticField,
    branch_coupling,
    coupling_amplitude,
    phase_preset,
    total_rabi,
)
from comb_response.core.errors import InvalidParameterError

pytestmark = pytest.mark.unit


def test_coupling_amplitude_examples():
    assert coupling_amplitude(0.0, 1) == pytest.approx(1.0)
    assert coupling_amplitude(math.pi / 4, -1) == pytest.approx(0.0, abs=1e-15)
    assert coupling_amplitude(math.pi / 4, 1) == pytest.approx(math.sqrt(2.0))


@pytest.mark.parametrize("g", [0, 2, -2])
def test_coupling_amplitude_rejects_uncoupled_index(g):
    with pytest.raises(InvalidParameterError):
        coupling_amplitude(0.1, g)


@pytest.mark.parametrize("eps", [0.0, 0.05, -0.2, 0.6, math.pi / 4, -math.pi / 4])
@pytest.mark.parametrize("g", [-1, 1])
def test_coupling_amplitude_swaps_branches_under_reversal(eps, g):
    assert coupling_amplitude(-eps, g) == pytest.approx(coupling_amplitude(eps, -g), abs=1e-15)


def test_branch_coupling_carries_relative_sign():
    eps = 0.3
    c, s = math.cos(eps), math.sin(eps)
    assert branch_coupling(eps, atomfield.LOWER) == pytest.approx(c + s)
    assert branch_coupling(eps, atomfield.UPPER) == pytest.approx(s - c)
    with pytest.raises(InvalidParameterError):
        branch_coupling(eps, atomfield.UNCOUPLED)


def test_ellipticity_bounds():
    assert EllipticityAngle(math.pi / 4).epsilon == pytest.approx(math.pi / 4)
    assert EllipticityAngle.from_qwp_angle(0.2).epsilon == 0.2
    with pytest.raises(InvalidParameterError):
        EllipticityAngle(0.9)


def test_total_rabi_examples():
    field = TrichromaticField(1.0, 2.0, 4.0, omega_m=12.0)
    assert total_rabi(field, 0.0) == pytest.approx(7.0)
    assert total_rabi(field, math.pi / 12.0) == pytest.approx(1.0 - 2.0 - 4.0)

    flipped = TrichromaticField(1.0, 2.0, 4.0, 0.0, math.pi, math.pi, omega_m=12.0)
    assert total_rabi(flipped, 0.0) == pytest.approx(1.0 - 2.0 - 4.0)


def test_total_rabi_vectorises_over_time():
    field = TrichromaticField(5.0, 5.0, 5.0, 0.0, 0.0, math.pi)
    times = np.linspace(0.0, 1.0, 7)
    values = total_rabi(field, times)
    assert values.shape == (7,)
    assert values[3] == pytest.approx(total_rabi(field, float(times[3])))


@pytest.mark.parametrize("region", list(PhaseRegion))
def test_rabi_intensity_is_periodic(region):
    field = TrichromaticField.with_preset(region, rabi=(5.0, 3.0, 7.0))
    times = np.linspace(0.0, 2.0 * field.period, 257)
    now = np.abs(total_rabi(field, times)) ** 2
    later = np.abs(total_rabi(field, times + field.period)) ** 2
    assert np.max(np.abs(now - later)) < 1e-12


def test_phase_presets():
    assert phase_preset(PhaseRegion.center) == (0.0, 0.0, math.pi)
    assert phase_preset("WingLike") == (0.0, 0.0, 0.0)
    assert phase_preset("center") == (0.0, 0.0, math.pi)
    for region in PhaseRegion:
        assert all(phase in (0.0, math.pi) for phase in phase_preset(region))
    with pytest.raises(InvalidParameterError):
        phase_preset("shoulder")


def test_field_rejects_invalid_values():
    with pytest.raises(InvalidParameterError):
        TrichromaticField(5.0, 5.0, 5.0, phi_1=1.0)
    with pytest.raises(InvalidParameterError):
        TrichromaticField(-1.0, 5.0, 5.0)
    with pytest.raises(InvalidParameterError):
        TrichromaticField(5.0, 5.0, 5.0, omega_m=0.0)
    with pytest.raises(InvalidParameterError):
        RelaxationRates(Gamma=5600.0, gamma=0.0)


def test_field_snaps_phases_and_exposes_components():
    field = TrichromaticField(5.0, 4.0, 3.0, 0.0, -math.pi, math.pi)
    assert field.phases == (0.0, math.pi, math.pi)
    assert field.components() == {0: 5.0, 1: -4.0, -1: -3.0}


def test_reference_rabi_falls_back_to_strongest_sideband():
    assert TrichromaticField(0.0, 2.0, 3.0).reference_rabi() == 3.0
    assert TrichromaticField(4.0, 2.0, 3.0).reference_rabi() == 4.0
    assert TrichromaticField(0.0, 0.0, 0.0).is_dark


def _trace_row() -> np.ndarray:
    return np.eye(atomfield.LEVEL_COUNT).reshape(-1)


def test_superoperators_preserve_trace():
    rates = RelaxationRates(5600.0, 1.0)
    h = atomfield.free_hamiltonian(3.0, 2.0) + atomfield.coupling_hamiltonian(0.2, 5.0, 5.0)
    generator = atomfield.commutator_superoperator(h) + atomfield.dissipator_superoperator(rates)
    assert np.max(np.abs(_trace_row() @ generator)) < 1e-9


def test_relaxation_rates_of_active_elements():
    rates = RelaxationRates(5600.0, 1.0)
    dissipator = atomfield.restrict(atomfield.dissipator_superoperator(rates))
    index = atomfield.ELEMENT_INDEX
    assert dissipator[index["rho_mp"], index["rho_mp"]] == pytest.approx(-2.0)
    assert dissipator[index["rho_me"], index["rho_me"]] == pytest.approx(-(2800.0 + 1.0))
    assert dissipator[index["rho_ee"], index["rho_ee"]] == pytest.approx(-5600.0)
    assert dissipator[index["rho_00"], index["rho_ee"]] == pytest.approx(5600.0 / 3.0)
    assert dissipator[index["rho_mm"], index["rho_mm"]] == pytest.approx(-2.0)
    assert dissipator[index["rho_mm"], index["rho_pp"]] == pytest.approx(1.0)


def test_larmor_and_detuning_phases():
    generator = atomfield.static_generator(omega_L=3.0, delta=2.0, rates=RelaxationRates(5600.0, 1.0))
    index = atomfield.ELEMENT_INDEX
    # rho_ge rotates as -i(g*Omega_L + delta); rho_mp as -i(-2*Omega_L).
    assert generator[index["rho_me"], index["rho_me"]].imag == pytest.approx(-(-3.0 + 2.0))
    assert generator[index["rho_pe"], index["rho_pe"]].imag == pytest.approx(-(3.0 + 2.0))
    assert generator[index["rho_mp"], index["rho_mp"]].imag == pytest.approx(6.0)


def test_vector_round_trip_of_active_elements():
    vec = np.arange(atomfield.ACTIVE_COUNT) + 1j
    rho = atomfield.matrix_from_vector(vec)
    assert rho[atomfield.UNCOUPLED, atomfield.LOWER] == 0
    assert np.array_equal(atomfield.vector_from_matrix(rho), vec)
