import logging
import os

import psutil

logger = logging.getLogger(__name__)


def _parse_positive_int(env_name: str, default: int) -> int:
    raw = os.environ.get(env_name)
    if raw is None or str(raw).strip() == "":
        return default
    try:
        value = int(str(raw).strip())
    except ValueError:
        logger.warning("%s=%r is invalid; using %d", env_name, raw, default)
        return default
    if value < 1:
        logger.warning("%s=%r must be >= 1; using %d", env_name, raw, default)
        return default
    return value


def machine_parallelism() -> int:
    return int(psutil.cpu_count(logical=True) or os.cpu_count() or 1)


def get_scan_workers_config() -> int:
    return _parse_positive_int("SCAN_WORKERS", default=machine_parallelism())


def resolve_workers(requested: int | None) -> int:
    """Explicit request wins; otherwise SCAN_WORKERS, then the CPU count."""
    if requested is not None and requested >= 1:
        return int(requested)
    return get_scan_workers_config()


def worker_profile(requested: int | None = None) -> dict[str, int]:
    """Worker counts as recorded next to every output file."""
    return {
        "scan_workers": resolve_workers(requested),
        "scan_workers_env": get_scan_workers_config(),
        "machine_parallelism": machine_parallelism(),
    }
