import pytest

from comb_response.app.models.run_config import RunConfig
from comb_response.core.run_metadata import build_run_metadata, get_host_profile, render_sidecar

pytestmark = pytest.mark.unit


def test_host_profile_shape():
    payload = get_host_profile()
    assert "platform" in payload
    assert payload["cpu_count_logical"] >= 1
    assert payload["total_ram_mb"] > 0


def test_run_metadata_flattens_config_and_versions():
    entries = build_run_metadata(RunConfig().effective_config(), include_timestamp=False)
    assert entries["config.gamma_excited"] == "5600.0"
    assert entries["config.channels"] == "absorption,birefringence,dichroism"
    assert entries["config.phases"] == ""
    assert entries["config.mode"] == "scan"
    assert "version.numpy" in entries
    assert "version.comb_response" in entries
    assert "host.total_ram_mb" in entries
    assert entries["workers.scan_workers"] == entries["workers.scan_workers_env"]
    assert int(entries["workers.machine_parallelism"]) >= 1
    assert "timestamp" not in entries


def test_run_metadata_timestamp():
    assert "timestamp" in build_run_metadata({}, include_timestamp=True)


def test_sidecar_rendering():
    assert render_sidecar({"a": "1", "b": ""}) == "a = 1\nb = \n"


def test_run_metadata_records_requested_workers(monkeypatch):
    monkeypatch.setenv("SCAN_WORKERS", "3")
    entries = build_run_metadata(RunConfig(workers=2).effective_config(), include_timestamp=False)
    assert entries["config.workers"] == "2"
    assert entries["workers.scan_workers"] == "2"
    assert entries["workers.scan_workers_env"] == "3"
