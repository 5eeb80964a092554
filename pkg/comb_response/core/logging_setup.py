"""Run-scoped logging.

Every record is stamped with the run id and the stage it was emitted from.
Both live in context variables, so worker threads started through
``contextvars.copy_context().run`` log under the run that submitted them.
"""

import logging
import os
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Iterator, Optional

_run_id_var: ContextVar[str] = ContextVar("run_id", default="-")
_stage_var: ContextVar[str] = ContextVar("stage", default="-")
_stage_detail_var: ContextVar[str] = ContextVar("stage_detail", default="-")

_CONTEXT_FIELDS = (
    ("run_id", _run_id_var),
    ("stage", _stage_var),
    ("stage_detail", _stage_detail_var),
)

LOG_FORMAT = "%(asctime)s %(levelname)-8s run_id=%(run_id)s stage=%(stage)s %(name)s %(message)s"
LOG_DATEFMT = "%Y-%m-%dT%H:%M:%S"
DEFAULT_LOG_FILENAME = "comb_response.log"

_configured = False
_env_loaded = False
_file_handler: Optional[RotatingFileHandler] = None


class ContextEnricherFilter(logging.Filter):
    """Fill run_id/stage/stage_detail from the current context unless the record already has them."""

    def filter(self, record: logging.LogRecord) -> bool:
        for attr, var in _CONTEXT_FIELDS:
            if getattr(record, attr, None) in (None, ""):
                setattr(record, attr, var.get() or "-")
        return True


def _repo_root() -> Path:
    return Path(__file__).resolve().parents[2]


def _env_flag(name: str) -> bool:
    return (os.environ.get(name) or "").strip().lower() in {"1", "true", "yes", "on"}


def _env_count(name: str, default: int) -> int:
    try:
        value = int((os.environ.get(name) or "").strip())
    except ValueError:
        return default
    return value if value >= 0 else default


@dataclass(frozen=True)
class LogSettings:
    level: int
    to_file: bool
    path: Path
    max_bytes: int
    backup_count: int

    @classmethod
    def from_env(cls, repo_root: Path) -> "LogSettings":
        level_name = (os.environ.get("LOG_LEVEL") or "INFO").strip().upper()
        log_dir = Path((os.environ.get("LOG_DIR") or "").strip() or "logs").expanduser()
        if not log_dir.is_absolute():
            log_dir = (repo_root / log_dir).resolve()
        filename = (os.environ.get("LOG_FILENAME") or "").strip() or DEFAULT_LOG_FILENAME
        return cls(
            level=getattr(logging, level_name, logging.INFO),
            to_file=_env_flag("LOG_TO_FILE"),
            path=log_dir / filename,
            max_bytes=_env_count("LOG_MAX_BYTES", 10 * 1024 * 1024),
            backup_count=_env_count("LOG_BACKUP_COUNT", 5),
        )


def _load_repo_env(repo_root: Path) -> None:
    global _env_loaded
    if _env_loaded:
        return
    from dotenv import load_dotenv

    # Values in the repository .env win over the shell.
    load_dotenv(dotenv_path=repo_root / ".env", override=True)
    _env_loaded = True


def _drop_file_handler(root: logging.Logger) -> None:
    global _file_handler
    if _file_handler is not None:
        root.removeHandler(_file_handler)
        _file_handler.close()
    _file_handler = None


def _sync_file_handler(root: logging.Logger, settings: LogSettings, formatter: logging.Formatter) -> None:
    global _file_handler
    if not settings.to_file:
        _drop_file_handler(root)
        return
    if _file_handler is not None and Path(_file_handler.baseFilename) != settings.path:
        _drop_file_handler(root)
    if _file_handler is None:
        settings.path.parent.mkdir(parents=True, exist_ok=True)
        _file_handler = RotatingFileHandler(
            settings.path,
            maxBytes=settings.max_bytes,
            backupCount=settings.backup_count,
            encoding="utf-8",
        )
        root.addHandler(_file_handler)
    _file_handler.maxBytes = settings.max_bytes
    _file_handler.backupCount = settings.backup_count
    _file_handler.setFormatter(formatter)


def configure_logging(force: bool = False) -> None:
    """Configure the root logger once per process; ``force`` re-reads the environment."""
    global _configured
    if _configured and not force:
        return

    repo_root = _repo_root()
    _load_repo_env(repo_root)
    settings = LogSettings.from_env(repo_root)
    formatter = logging.Formatter(fmt=LOG_FORMAT, datefmt=LOG_DATEFMT)

    root = logging.getLogger()
    if not root.handlers:
        logging.basicConfig(level=settings.level, format=LOG_FORMAT, datefmt=LOG_DATEFMT)
    root.setLevel(settings.level)
    for handler in root.handlers:
        handler.setFormatter(formatter)
    _sync_file_handler(root, settings, formatter)

    for handler in root.handlers:
        if not any(isinstance(f, ContextEnricherFilter) for f in handler.filters):
            handler.addFilter(ContextEnricherFilter())
    _configured = True


def current_run_id() -> str:
    return _run_id_var.get() or "-"


def current_stage() -> tuple[str, str]:
    return _stage_var.get() or "-", _stage_detail_var.get() or "-"


@contextmanager
def run_context(run_id: str) -> Iterator[None]:
    token = _run_id_var.set(run_id or "-")
    try:
        yield
    finally:
        _run_id_var.reset(token)


@contextmanager
def stage_context(stage: str, stage_detail: str = "") -> Iterator[None]:
    stage_token = _stage_var.set(stage or "-")
    detail_token = _stage_detail_var.set(stage_detail or "-")
    try:
        yield
    finally:
        _stage_detail_var.reset(detail_token)
        _stage_var.reset(stage_token)
