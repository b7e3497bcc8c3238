"""Delimited output and bundle manifests.

Every protocol writes one directory: a ``manifest.txt`` of key=value lines
(protocol parameters, checkpoint hash, seeds, artifact version) plus CSV
files.  CSVs start with ``#``-prefixed metadata lines (schedule description,
manifest reference), then a header row.  Floats are formatted with
``repr``, so identical inputs reproduce byte-identical files.
"""

from __future__ import annotations

import datetime
from pathlib import Path

ARTIFACT_VERSION = "0.1.0"


def fmt_value(value) -> str:
    if hasattr(value, "item"):  # numpy scalars masquerade as float/int
        value = value.item()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def ensure_outdir(path: str | Path, force: bool = False) -> Path:
    """Create the output directory, refusing to reuse a non-empty one."""
    path = Path(path)
    if path.exists() and any(path.iterdir()) and not force:
        raise FileExistsError(
            f"output directory {path} is not empty (use --force to overwrite)")
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(path: str | Path, columns, rows, meta: dict | None = None):
    lines = []
    lines.append("# manifest: manifest.txt")
    for key, value in (meta or {}).items():
        lines.append(f"# {key}: {fmt_value(value)}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(fmt_value(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path: str | Path):
    """(meta, columns, rows-as-strings) for files written by write_csv."""
    meta: dict[str, str] = {}
    columns: list[str] = []
    rows: list[list[str]] = []
    for line in Path(path).read_text().splitlines():
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            key, _, value = body.partition(":")
            meta[key.strip()] = value.strip()
        elif not columns:
            columns = line.split(",")
        else:
            rows.append(line.split(","))
    return meta, columns, rows


def write_manifest(out_dir: str | Path, fields: dict):
    lines = [f"artifact_version={ARTIFACT_VERSION}"]
    lines.append("created_utc=" + datetime.datetime.now(
        datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"))
    for key, value in fields.items():
        lines.append(f"{key}={fmt_value(value)}")
    Path(out_dir, "manifest.txt").write_text("\n".join(lines) + "\n")


def read_manifest(out_dir: str | Path) -> dict[str, str]:
    fields = {}
    for line in Path(out_dir, "manifest.txt").read_text().splitlines():
        if line:
            key, _, value = line.partition("=")
            fields[key] = value
    return fields


def seeds_field(seeds) -> str:
    return ";".join(str(s) for s in seeds)
