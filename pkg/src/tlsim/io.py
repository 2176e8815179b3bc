"""Deterministic CSV/JSON emission with an embedded metadata header.

Both formats carry bit-identical numbers: floats are rendered with
``repr`` (shortest round-trip form) in CSV and passed as native numbers to
the JSON encoder, which uses the same representation.  Metadata records
the configuration hash, the full parameter echo, solver tolerances and the
package version, so repeated runs with one config are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any, Iterable

from . import __version__
from .steady_solver import EPS_ALPHA, EPS_X


def dbm_to_watts(dbm: float) -> float:
    """P[W] = 1e-3 * 10^(dBm/10)."""
    return 1e-3 * 10.0 ** (dbm / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0:
        raise ValueError("power must be positive for a dBm value")
    return 10.0 * math.log10(watts / 1e-3)


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return repr(float(value))
    if isinstance(value, complex):
        value = complex(value)
        return f"{value.real!r}{value.imag:+}j"
    if isinstance(value, int):
        return str(int(value))
    return str(value)


def config_hash(config: dict[str, Any]) -> str:
    """sha256 over the canonical sorted key=value rendering."""
    blob = "\n".join(f"{k}={_fmt(config[k])}" for k in sorted(config))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def metadata_block(config: dict[str, Any], command: str) -> dict[str, Any]:
    return {
        "generator": f"tlsim {__version__}",
        "command": command,
        "config_hash": config_hash(config),
        "eps_alpha": EPS_ALPHA,
        "eps_x": EPS_X,
        "parameters": {k: config[k] for k in sorted(config)},
    }


def write_csv(path: str, columns: list[str], rows: Iterable[Iterable[Any]],
              metadata: dict[str, Any]) -> None:
    lines: list[str] = []
    lines.append(f"# generator: {metadata['generator']}")
    lines.append(f"# command: {metadata['command']}")
    lines.append(f"# config_hash: {metadata['config_hash']}")
    lines.append(f"# eps_alpha: {metadata['eps_alpha']!r}")
    lines.append(f"# eps_x: {metadata['eps_x']!r}")
    for key, value in metadata["parameters"].items():
        lines.append(f"# param {key} = {_fmt(value)}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path: str, columns: list[str],
               rows: Iterable[Iterable[Any]],
               metadata: dict[str, Any]) -> None:
    def encode(v: Any) -> Any:
        if isinstance(v, complex) and not isinstance(v, float):
            v = complex(v)
            return {"re": v.real, "im": v.imag}
        if isinstance(v, float):
            v = float(v)
            return repr(v) if not math.isfinite(v) else v
        if isinstance(v, (int, bool)):
            return int(v)
        return v

    payload = {
        "metadata": {k: encode(v) if not isinstance(v, dict) else
                     {kk: encode(vv) for kk, vv in v.items()}
                     for k, v in metadata.items()},
        "columns": columns,
        "rows": [[encode(v) for v in row] for row in rows],
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_table(path: str, fmt: str, columns: list[str],
                rows: list[list[Any]], metadata: dict[str, Any]) -> None:
    if fmt == "csv":
        write_csv(path, columns, rows, metadata)
    elif fmt == "json":
        write_json(path, columns, rows, metadata)
    else:
        raise ValueError(f"unknown output format {fmt!r}")
