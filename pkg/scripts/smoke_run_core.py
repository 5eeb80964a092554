import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from comb_response.core.atomfield import PhaseRegion, RelaxationRates, TrichromaticField
from comb_response.core.floquet import truncation_check
from comb_response.core.observables import solve_point


def test_core():
    rates = RelaxationRates(Gamma=5600.0, gamma=1.0)

    print("Testing harmonic-balance core...")
    for region in PhaseRegion:
        field = TrichromaticField.with_preset(region)
        for omega_L in (0.0, 6.0, 12.0):
            response = solve_point(field, 0.1, omega_L, rates)
            report = truncation_check(field, 0.1, omega_L, rates)
            print(
                f"{region.value:>6} omega_L={omega_L:5.1f} "
                f"A={response.absorption:+.6e} B={response.birefringence:+.6e} D={response.dichroism:+.6e} "
                f"truncation={report.max_relative_difference:.1e}"
            )

if __name__ == "__main__":
    test_core()
    print("Smoke test finished.")
