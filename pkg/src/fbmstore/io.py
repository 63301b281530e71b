"""Deterministic JSON/CSV writers that embed run metadata."""
from __future__ import annotations

import csv
import json
import os

import numpy as np

from . import __version__

OUTDIR_ENV = "FBMSTORE_OUTDIR"


def default_outdir() -> str:
    return os.environ.get(OUTDIR_ENV, ".")


def metadata(command: str, config: dict) -> dict:
    return {
        "tool": "fbmstore",
        "version": __version__,
        "command": command,
        "config": config,
        "seed": config.get("seed"),
    }


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if np.isnan(v):
            return "nan"
        if np.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(payload) -> str:
    return json.dumps(_clean(payload), sort_keys=True)


def write_json(path: str, result, meta: dict) -> str:
    with open(path, "w", newline="\n") as fh:
        json.dump(_clean({"meta": meta, "result": result}), fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: str, header, rows, meta: dict) -> str:
    """CSV with a single leading ``#`` comment line holding the metadata."""
    with open(path, "w", newline="") as fh:
        fh.write("# " + dumps(meta) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path: str) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]
