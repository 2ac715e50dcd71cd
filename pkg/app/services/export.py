"""Atomic writers for JSON reports, CSV tables and run metadata."""

from __future__ import annotations

import json
import logging
import os
import platform
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Optional

import pandas as pd
from pydantic import BaseModel

from app.services.errors import ExportError

logger = logging.getLogger(__name__)

_OUTPUT_ENV_VAR = "OUTPUT_DIR"
_DEFAULT_OUTPUT_DIR = "reports"
_METADATA_FILE = "run_metadata.json"


def resolve_output_dir(explicit: Optional[str | Path] = None) -> Path:
    """Pick the output directory: explicit flag, then OUTPUT_DIR, then ``reports/``."""

    raw = explicit or os.getenv(_OUTPUT_ENV_VAR) or _DEFAULT_OUTPUT_DIR
    path = Path(raw).expanduser()
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ExportError(f"cannot create output directory {path}", path=str(path)) from exc
    return path


def write_text(path: Path, text: str) -> Path:
    """Write ``text`` through a temporary sibling file and an atomic rename."""

    path = Path(path)
    temp_name: Optional[str] = None
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(
            "w", encoding="utf-8", dir=path.parent, prefix=f".{path.name}.", delete=False, newline=""
        ) as handle:
            temp_name = handle.name
            handle.write(text)
        os.replace(temp_name, path)
    except OSError as exc:
        if temp_name is not None:
            Path(temp_name).unlink(missing_ok=True)
        raise ExportError(f"cannot write {path}", path=str(path)) from exc
    logger.debug("wrote %s", path)
    return path


def to_jsonable(payload: Any) -> Any:
    if isinstance(payload, BaseModel):
        return payload.model_dump(mode="json", by_alias=True)
    return payload


def write_json(path: Path, payload: Any) -> Path:
    """Deterministic JSON (sorted keys, fixed indentation)."""

    text = json.dumps(to_jsonable(payload), ensure_ascii=False, indent=2, sort_keys=True, allow_nan=True)
    return write_text(path, text + "\n")


def write_frame(path: Path, frame: pd.DataFrame, header_lines: Iterable[str] = ()) -> Path:
    """CSV with optional ``# key=value`` comment lines ahead of the column header."""

    prefix = "".join(f"# {line}\n" for line in header_lines)
    body = frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")
    return write_text(path, prefix + body)


def write_run_metadata(out_dir: Path, command: str, extra: Optional[dict[str, Any]] = None) -> Path:
    """Timestamps and versions live here so the reports themselves stay reproducible."""

    import numpy
    import scipy

    metadata = {
        "command": command,
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
    }
    if extra:
        metadata.update(extra)
    return write_json(Path(out_dir) / _METADATA_FILE, metadata)


def library_versions() -> dict[str, str]:
    import numpy
    import scipy

    return {"numpy": numpy.__version__, "scipy": scipy.__version__, "pandas": pd.__version__}
