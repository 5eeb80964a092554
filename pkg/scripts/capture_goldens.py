#!/usr/bin/env python3
"""
scripts/capture_goldens.py
==========================
Captures golden line-shape scans with the harmonic-balance solver and saves
them to tests/golden/<fixture_id>.csv, next to a .meta sidecar recording the
versions and host that produced them.

Usage:
    source venv/bin/activate
    python scripts/capture_goldens.py                        # all fixtures
    python scripts/capture_goldens.py --golden wing_eps0.1   # one fixture

Goldens are compared in tests/test_golden_scans.py with a relative tolerance,
so a refresh is only needed after an intentional change of the physics:
    python scripts/capture_goldens.py --force
    git add tests/golden/ && git commit -m "chore: refresh golden scans (reason: <why>)"
"""

import argparse
import json
import sys
import time
from pathlib import Path

# Ensure project root is on path
PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from comb_response.app.models.run_config import RunConfig  # noqa: E402
from comb_response.app.runner import CSV_FLOAT_FORMAT  # noqa: E402
from comb_response.core.logging_setup import configure_logging  # noqa: E402
from comb_response.core.observables import scan_larmor  # noqa: E402
from comb_response.core.run_metadata import build_run_metadata, render_sidecar  # noqa: E402

FIXTURES_FILE = PROJECT_ROOT / "tests" / "fixtures" / "golden_scans.json"
GOLDEN_DIR = PROJECT_ROOT / "tests" / "golden"


def fixture_config(fixture: dict) -> RunConfig:
    settings = dict(fixture["settings"])
    start, stop = settings.pop("scan")
    return RunConfig(scan_start=start, scan_stop=stop, derivative=False, **settings)


def capture_fixture(fixture: dict, force: bool = False) -> Path:
    fid = fixture["id"]
    golden_path = GOLDEN_DIR / f"{fid}.csv"
    if golden_path.exists() and not force:
        print(f"  [SKIP] {fid}: golden already exists (use --force to overwrite)")
        return golden_path

    print(f"  [CAPTURE] {fid} ...")
    config = fixture_config(fixture)
    t0 = time.time()
    scan = scan_larmor(
        config.trichromatic_field(),
        config.ellipticity(),
        config.rates(),
        config.order,
        config.grid(),
        workers=1,
    )
    if scan.failures:
        raise RuntimeError(f"{len(scan.failures)} scan point(s) failed for {fid}")

    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    scan.to_frame().to_csv(golden_path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    entries = build_run_metadata(config.effective_config())
    entries["fixture"] = fid
    golden_path.with_suffix(".meta").write_text(render_sidecar(entries), encoding="utf-8")
    print(f"    saved {golden_path.name} ({config.points} points, {time.time() - t0:.1f}s)")
    return golden_path


def main():
    parser = argparse.ArgumentParser(description="Capture golden line-shape scans.")
    parser.add_argument("--golden", help="Fixture ID to capture (omit for all)")
    parser.add_argument("--force", action="store_true", help="Overwrite existing goldens")
    args = parser.parse_args()

    configure_logging()
    fixtures = json.loads(FIXTURES_FILE.read_text(encoding="utf-8"))["fixtures"]
    if args.golden:
        fixtures = [f for f in fixtures if f["id"] == args.golden]
        if not fixtures:
            print(f"ERROR: fixture '{args.golden}' not found in {FIXTURES_FILE.name}")
            sys.exit(1)

    print(f"\nCapturing {len(fixtures)} golden(s)...\n")
    for fixture in fixtures:
        try:
            capture_fixture(fixture, force=args.force)
        except Exception as e:
            print(f"  FAILED {fixture['id']}: {e}")
            raise

    print("\nAll goldens captured.\n")


if __name__ == "__main__":
    main()
