"""CSV/JSON emission and run manifests."""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

UNITS_LINE = "# hbar = k_B = 1"


def format_number(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.16e}"


def write_csv(path: Path, columns: dict) -> Path:
    """Comma-separated columns with a units comment and a header row."""
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    length = {a.shape[0] for a in arrays}
    if len(length) != 1:
        raise ValueError("CSV columns differ in length")
    lines = [UNITS_LINE, ",".join(names)]
    for row in zip(*arrays):
        lines.append(",".join(format_number(v) for v in row))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path: Path) -> dict:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    names = lines[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(names))
    return {n: data[:, k] for k, n in enumerate(names)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def write_json(path: Path, data) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    return path


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir: Path, config: dict, version: str, wall_time: float,
                   derived: dict, outputs: list[Path]) -> Path:
    manifest = {
        "config": config,
        "tool_version": version,
        "wall_time_s": wall_time,
        "derived": derived,
        "outputs": {Path(p).name: sha256(p) for p in outputs},
    }
    return write_json(Path(out_dir) / "manifest.json", manifest)
