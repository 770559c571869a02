"""Deterministic CSV/JSON writers with a schema version and provenance header."""

from __future__ import annotations

import csv
import io as _io
import json
import math
from importlib import metadata

import numpy as np

__all__ = [
    "SCHEMA_VERSION",
    "code_version",
    "provenance",
    "to_jsonable",
    "dumps_json",
    "format_csv",
    "parse_csv",
    "read_config_file",
]

SCHEMA_VERSION = 1


def code_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover - source checkout
        return "0+unknown"


def provenance(command: str, params: dict, seeds: dict | None = None) -> dict:
    """Everything needed to reproduce a run; contains no timestamps so outputs stay byte-identical."""
    return {
        "command": command,
        "package": "mbshape",
        "code_version": code_version(),
        "numpy": np.__version__,
        "parameters": to_jsonable(params),
        "seeds": to_jsonable(seeds or {}),
    }


def to_jsonable(obj):
    """Convert numpy scalars, arrays, enums and non-finite floats to plain JSON values.

    Non-finite floats become the strings ``"nan"``, ``"inf"`` and ``"-inf"``.
    """
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, complex):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dumps_json(payload: dict) -> str:
    body = {"schema_version": SCHEMA_VERSION}
    body.update(to_jsonable(payload))
    return json.dumps(body, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def format_csv(columns, rows, meta: dict, prov: dict, footer: dict | None = None) -> str:
    """CSV text: ``#`` header lines, a column row, data rows, ``#`` footer lines.

    Floats are written with ``repr`` so that parsing them back with
    ``float`` reproduces the in-memory values bit for bit.
    """
    out = _io.StringIO()
    out.write(f"# schema_version={SCHEMA_VERSION}\n")
    out.write("# provenance=" + json.dumps(to_jsonable(prov), sort_keys=True, separators=(",", ":")) + "\n")
    for k, v in meta.items():
        out.write(f"# {k}={json.dumps(to_jsonable(v), sort_keys=True, separators=(',', ':'))}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    for k, v in (footer or {}).items():
        out.write(f"# {k}={json.dumps(to_jsonable(v), sort_keys=True, separators=(',', ':'))}\n")
    return out.getvalue()


def parse_csv(text: str) -> tuple:
    """Inverse of :func:`format_csv`: ``(meta, columns, rows)`` with rows as strings."""
    meta = {}
    data = []
    for line in text.splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition("=")
            try:
                meta[k] = json.loads(v)
            except json.JSONDecodeError:
                meta[k] = v
        elif line:
            data.append(line)
    rows = list(csv.reader(data))
    return meta, rows[0], rows[1:]


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, dashes in keys become underscores."""
    cfg = {}
    with open(path) as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected key = value")
            k, v = (s.strip() for s in line.split("=", 1))
            cfg[k.lstrip("-").replace("-", "_")] = v
    return cfg
