import platform
from datetime import datetime, timezone
from importlib import metadata

import psutil

from comb_response.core.concurrency import worker_profile

_TRACKED_PACKAGES = ("numpy", "scipy", "pandas", "pydantic", "python-dotenv", "psutil")


def _package_version(name: str) -> str:
    try:
        return metadata.version(name)
    except metadata.PackageNotFoundError:
        return "not-installed"


def package_versions() -> dict[str, str]:
    versions = {"python": platform.python_version()}
    try:
        versions["comb_response"] = metadata.version("comb_response")
    except metadata.PackageNotFoundError:
        from comb_response import __version__

        versions["comb_response"] = __version__
    for name in _TRACKED_PACKAGES:
        versions[name] = _package_version(name)
    return versions


def get_host_profile() -> dict:
    vm = psutil.virtual_memory()
    return {
        "platform": platform.platform(),
        "cpu_count_logical": int(psutil.cpu_count(logical=True) or 0),
        "cpu_count_physical": int(psutil.cpu_count(logical=False) or 0),
        "total_ram_mb": round(float(vm.total) / (1024 * 1024), 1),
    }


def build_run_metadata(effective_config: dict, *, include_timestamp: bool = True) -> dict[str, str]:
    """Flatten config, versions, host and worker counts into the key = value pairs of a sidecar."""
    entries: dict[str, str] = {}
    for key in sorted(effective_config):
        entries[f"config.{key}"] = _format_value(effective_config[key])
    for key, value in package_versions().items():
        entries[f"version.{key}"] = value
    for key, value in get_host_profile().items():
        entries[f"host.{key}"] = str(value)
    for key, value in worker_profile(effective_config.get("workers")).items():
        entries[f"workers.{key}"] = str(value)
    if include_timestamp:
        entries["timestamp"] = datetime.now(timezone.utc).isoformat()
    return entries


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(v) for v in value)
    if value is None:
        return ""
    return str(value)


def render_sidecar(entries: dict[str, str]) -> str:
    return "".join(f"{key} = {value}\n" for key, value in entries.items())
