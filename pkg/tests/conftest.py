"""
tests/conftest.py
-----------------
Shared fixtures: the standard parameter set (Gamma = 5600 kHz, gamma = 1 kHz,
three 5 kHz components at 12 kHz spacing) and golden-file loading.
"""
from pathlib import Path

import pandas as pd
import pytest

from comb_response.core.atomfield import PhaseRegion, RelaxationRates, TrichromaticField

PROJECT_ROOT = Path(__file__).resolve().parent.parent
GOLDEN_DIR = PROJECT_ROOT / "tests" / "golden"

GAMMA_EXCITED = 5600.0
GAMMA_GROUND = 1.0
RABI = 5.0
OMEGA_M = 12.0


def make_field(region: PhaseRegion = PhaseRegion.wing, *, rabi: float = RABI, delta: float = 0.0) -> TrichromaticField:
    return TrichromaticField.with_preset(region, rabi=(rabi, rabi, rabi), omega_m=OMEGA_M, delta=delta)


def load_golden(name: str) -> pd.DataFrame:
    p = GOLDEN_DIR / f"{name}.csv"
    if not p.exists():
        pytest.skip(
            f"Golden not found for '{name}'. "
            f"Run: python scripts/capture_goldens.py --golden {name}"
        )
    return pd.read_csv(p)


@pytest.fixture
def rates() -> RelaxationRates:
    return RelaxationRates(Gamma=GAMMA_EXCITED, gamma=GAMMA_GROUND)


@pytest.fixture
def wing_field() -> TrichromaticField:
    return make_field(PhaseRegion.wing)


@pytest.fixture
def center_field() -> TrichromaticField:
    return make_field(PhaseRegion.center)


@pytest.fixture
def dark_field() -> TrichromaticField:
    return make_field(PhaseRegion.wing, rabi=0.0)


@pytest.fixture
def clean_env(monkeypatch):
    for name in ("SCAN_WORKERS", "LOG_TO_FILE", "LOG_DIR", "LOG_FILENAME"):
        monkeypatch.delenv(name, raising=False)
    return monkeypatch
