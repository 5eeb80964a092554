import pytest

from comb_response.core import concurrency

pytestmark = pytest.mark.unit


def test_worker_profile_reads_env(monkeypatch):
    monkeypatch.setenv("SCAN_WORKERS", "4")

    profile = concurrency.worker_profile()
    assert profile["scan_workers"] == 4
    assert profile["scan_workers_env"] == 4
    assert profile["machine_parallelism"] >= 1

    assert concurrency.worker_profile(2)["scan_workers"] == 2


@pytest.mark.parametrize("raw", ["many", "0", "-3"])
def test_invalid_worker_count_falls_back_to_cpu_count(monkeypatch, raw):
    monkeypatch.setenv("SCAN_WORKERS", raw)
    assert concurrency.get_scan_workers_config() == concurrency.machine_parallelism()


def test_explicit_request_wins_over_env(monkeypatch):
    monkeypatch.setenv("SCAN_WORKERS", "4")
    assert concurrency.resolve_workers(2) == 2
    assert concurrency.resolve_workers(None) == 4
    assert concurrency.resolve_workers(0) == 4
