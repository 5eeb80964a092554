"""
Golden line-shape scans captured by scripts/capture_goldens.py.

Each fixture in tests/fixtures/golden_scans.json is rescanned and compared
against its stored CSV. Missing goldens skip rather than fail.
"""
import json

import numpy as np
import pytest

from comb_response.core.observables import CHANNELS, scan_larmor
from scripts.capture_goldens import fixture_config
from tests.conftest import PROJECT_ROOT, load_golden

pytestmark = pytest.mark.unit

FIXTURES = json.loads((PROJECT_ROOT / "tests" / "fixtures" / "golden_scans.json").read_text(encoding="utf-8"))[
    "fixtures"
]


@pytest.mark.parametrize("fixture", FIXTURES, ids=[f["id"] for f in FIXTURES])
def test_scan_matches_golden(fixture):
    golden = load_golden(fixture["id"])
    config = fixture_config(fixture)
    scan = scan_larmor(
        config.trichromatic_field(),
        config.ellipticity(),
        config.rates(),
        config.order,
        config.grid(),
        workers=2,
    )
    assert np.allclose(scan.grid, golden["omega_L_khz"].to_numpy(), rtol=0.0, atol=1e-12)
    for name in CHANNELS:
        expected = golden[name].to_numpy()
        scale = float(np.max(np.abs(expected))) or 1.0
        assert np.allclose(scan.channel(name), expected, rtol=1e-9, atol=1e-12 * scale), name


def test_committed_goldens_belong_to_fixtures():
    committed = sorted(p.stem for p in (PROJECT_ROOT / "tests" / "golden").glob("*.csv"))
    assert committed
    assert set(committed) <= {f["id"] for f in FIXTURES}
    for name in committed:
        assert list(load_golden(name).columns) == ["omega_L_khz", *CHANNELS]
