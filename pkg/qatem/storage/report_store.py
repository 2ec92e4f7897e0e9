from __future__ import annotations

import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd

from .. import __version__
from ..errors import ValidationError
from ..physcore import CONSTANTS, RngSpec

LOG = logging.getLogger(__name__)

FORMATS = ("csv", "json", "parquet")
MANIFEST_SUFFIX = ".manifest.json"
# pyarrow is required for parquet output
PARQUET_WRITE_KWARGS = {
    "engine": "pyarrow",
    "compression": "zstd",
    "use_dictionary": True,
    "row_group_size": 50_000,
}
CSV_WRITE_KWARGS = {"index": False, "float_format": "%.17g", "lineterminator": "\n"}


@dataclass(frozen=True)
class RunManifest:
    command: str
    params: Dict[str, Any]
    constants_version: str = CONSTANTS.version
    rng: Optional[Dict[str, Any]] = None
    tool_version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    @classmethod
    def create(cls, command: str, params: Dict[str, Any], rng: Optional[RngSpec] = None) -> "RunManifest":
        return cls(command=command, params=dict(params), rng=rng.as_dict() if rng is not None else None)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "params": _jsonable(self.params),
            "constants_version": self.constants_version,
            "rng": self.rng,
            "tool_version": self.tool_version,
            "timestamp": self.timestamp,
        }


def manifest_path(path: Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + MANIFEST_SUFFIX)


def output_path(out_dir: Path, stem: str, fmt: str) -> Path:
    _check_format(fmt)
    return Path(out_dir) / f"{stem}.{fmt}"


def _check_format(fmt: str) -> None:
    if fmt not in FORMATS:
        raise ValidationError(f"unsupported output format '{fmt}', expected one of {FORMATS}")


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def _atomic_write(path: Path, writer) -> None:
    """Run ``writer(tmp_path)`` then move the result over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    os.close(fd)
    try:
        writer(Path(tmp))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _normalize_columns(df: pd.DataFrame, columns: Optional[Sequence[str]]) -> pd.DataFrame:
    if columns is None:
        return df
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise ValidationError(f"missing columns for output table: {missing}")
    return df[list(columns)]


def write_json(payload: Dict[str, Any], path: Path, manifest: Optional[RunManifest] = None) -> Path:
    text = json.dumps(_jsonable(payload), indent=2, sort_keys=False) + "\n"
    _atomic_write(path, lambda tmp: tmp.write_text(text, encoding="utf-8"))
    LOG.debug("Wrote %s", path)
    if manifest is not None:
        write_manifest(manifest, path)
    return Path(path)


def write_manifest(manifest: RunManifest, path: Path) -> Path:
    target = manifest_path(path)
    text = json.dumps(manifest.as_dict(), indent=2) + "\n"
    _atomic_write(target, lambda tmp: tmp.write_text(text, encoding="utf-8"))
    return target


def write_table(
    df: pd.DataFrame,
    path: Path,
    fmt: str = "csv",
    columns: Optional[Sequence[str]] = None,
    manifest: Optional[RunManifest] = None,
) -> Path:
    _check_format(fmt)
    out = _normalize_columns(df, columns)
    if fmt == "csv":
        writer = lambda tmp: out.to_csv(tmp, **CSV_WRITE_KWARGS)  # noqa: E731
    elif fmt == "json":
        writer = lambda tmp: out.to_json(tmp, orient="records", indent=2, double_precision=15)  # noqa: E731
    else:
        writer = lambda tmp: out.to_parquet(tmp, index=False, **PARQUET_WRITE_KWARGS)  # noqa: E731
    _atomic_write(path, writer)
    LOG.debug("Wrote %s rows into %s", len(out), path)
    if manifest is not None:
        write_manifest(manifest, path)
    return Path(path)


def read_table(path: Path) -> pd.DataFrame:
    path = Path(path)
    suffix = path.suffix.lstrip(".")
    if suffix == "csv":
        return pd.read_csv(path)
    if suffix == "json":
        return pd.read_json(path, orient="records")
    if suffix == "parquet":
        return pd.read_parquet(path, engine="pyarrow")
    raise ValidationError(f"cannot infer table format of {path}")


def read_manifest(path: Path) -> Dict[str, Any]:
    return json.loads(manifest_path(path).read_text(encoding="utf-8"))
