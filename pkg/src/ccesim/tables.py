"""Bit-stable tabular output.

All analysis artifacts are CSV: UTF-8, header row, dot decimal
separator, newline-terminated lines, floats at 17 significant digits
(round-trip exact). Files are written to a temporary sibling and
atomically renamed, so a crashed run never leaves a partial file.

A JSON manifest accompanies every output directory: tool version,
resolved configuration, master seed, timestamp (honouring
SOURCE_DATE_EPOCH for reproducible builds), schema versions, and an
inventory of emitted files with row counts.
"""

from __future__ import annotations

import dataclasses
import json
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

from .model import ConfigError, StrategyId

MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class TableSchema:
    name: str
    version: int
    columns: tuple[str, ...]


STEP_RECORDS = TableSchema(
    "step_records", 1,
    ("step", "scope", "median_skill", "mean_skill", "max_skill", "skill_var",
     "share_noai", "share_complement", "share_substitute"),
)
FIELD_SAMPLES = TableSchema(
    "field_samples", 1,
    ("x0", "xc", "xs", "dx0", "dxc", "dxs", "speed", "confidence_flag"),
)
TRAJECTORIES = TableSchema("trajectories", 1, ("traj_id", "t", "x0", "xc", "xs"))


def aggregates_schema(coord_columns: Sequence[str]) -> TableSchema:
    return TableSchema(
        "aggregates", 1,
        tuple(coord_columns) + (
            "step", "median_of_medians", "se",
            "share_noai", "share_complement", "share_substitute",
        ),
    )


def summary_schema(coord_columns: Sequence[str]) -> TableSchema:
    return TableSchema(
        "summary", 1,
        tuple(coord_columns) + (
            "label", "final_median_of_medians", "final_se",
            "share_noai", "share_complement", "share_substitute",
            "frac_dominant_noai", "frac_dominant_complement",
            "frac_dominant_substitute", "dominant",
        ),
    )


def format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return "%.17g" % value
    text = str(value)
    if any(ch in text for ch in (",", "\n", "\r", '"')):
        raise ConfigError(f"cell value {text!r} contains CSV delimiter characters")
    return text


def _atomic_write_bytes(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_csv(rows: Iterable[Sequence[Any]], schema: TableSchema, path: str | Path) -> int:
    """Write rows under the schema; returns the data row count."""
    path = Path(path)
    lines = [",".join(schema.columns)]
    count = 0
    for row in rows:
        if len(row) != len(schema.columns):
            raise ConfigError(
                f"row with {len(row)} cells does not fit schema "
                f"{schema.name} ({len(schema.columns)} columns)"
            )
        lines.append(",".join(format_cell(cell) for cell in row))
        count += 1
    payload = ("\n".join(lines) + "\n").encode("utf-8")
    _atomic_write_bytes(path, payload)
    return count


def _plain(value: Any) -> Any:
    if isinstance(value, StrategyId):
        return value.token
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: _plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def config_to_dict(config: Any) -> Any:
    """Dataclass config tree as JSON-ready plain data."""
    return _plain(config)


def manifest_timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    moment = int(epoch) if epoch is not None else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(moment))


class ManifestWriter:
    """Collects emitted outputs and writes the directory manifest."""

    def __init__(self, out_dir: str | Path, config: Any, master_seed: int, version: str):
        self.out_dir = Path(out_dir)
        self.config = config
        self.master_seed = master_seed
        self.version = version
        self.outputs: list[dict] = []
        self.schema_versions: dict[str, int] = {}
        self.analysis: dict[str, Any] = {}

    def emit(self, rows: Iterable[Sequence[Any]], schema: TableSchema, filename: str) -> Path:
        path = self.out_dir / filename
        count = emit_csv(rows, schema, path)
        self.outputs.append({"path": filename, "schema": schema.name, "rows": count})
        self.schema_versions[schema.name] = schema.version
        return path

    def write(self) -> Path:
        manifest = {
            "tool": "ccesim",
            "version": self.version,
            "timestamp": manifest_timestamp(),
            "master_seed": self.master_seed,
            "config": config_to_dict(self.config),
            "schema_versions": self.schema_versions,
            "outputs": self.outputs,
            "analysis": self.analysis,
        }
        payload = (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8")
        path = self.out_dir / MANIFEST_NAME
        _atomic_write_bytes(path, payload)
        return path


def verify_manifest(out_dir: str | Path) -> dict:
    """Check the inventory invariant: files exist and row counts match."""
    out_dir = Path(out_dir)
    with open(out_dir / MANIFEST_NAME, "rb") as handle:
        manifest = json.load(handle)
    for entry in manifest["outputs"]:
        path = out_dir / entry["path"]
        if not path.exists():
            raise ConfigError(f"manifest references missing file {entry['path']}")
        with open(path, "rb") as handle:
            rows = sum(1 for _ in handle) - 1
        if rows != entry["rows"]:
            raise ConfigError(
                f"{entry['path']}: manifest says {entry['rows']} rows, file has {rows}"
            )
    return manifest
