"""Plain-text artifacts: trajectory CSVs, error reports and JSON summaries.

Every file opens with a ``#`` metadata block.  Floats are written with
``repr`` so a rerun with the same inputs reproduces the bytes exactly.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import ParseError
from .lindblad import Trajectory
from .oracle import ErrorSeries

__all__ = [
    "content_hash",
    "format_trajectory",
    "write_trajectory",
    "read_trajectory",
    "format_error_series",
    "write_json",
    "format_json",
    "metadata_header",
]


def content_hash(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def _f(x: float) -> str:
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def metadata_header(meta: Mapping[str, object]) -> str:
    """``# key: value`` lines; dict values are compact sorted JSON."""
    lines = []
    for key, val in meta.items():
        if isinstance(val, (dict, list)):
            val = json.dumps(val, sort_keys=True, separators=(",", ":"))
        for part in str(val).splitlines() or [""]:
            lines.append(f"# {key}: {part}\n")
    return "".join(lines)


def format_trajectory(traj: Trajectory, meta: Mapping[str, object] | None = None) -> str:
    buf = io.StringIO()
    buf.write(metadata_header(meta or {}))
    for w in traj.warnings:
        buf.write(f"# warning: {w}\n")
    cols = ["t", "pop_emitter"] + [f"pop_mode_{i + 1}" for i in range(traj.n_modes)] + ["trace_drift"]
    has_eig = traj.min_eigenvalue is not None
    if has_eig:
        cols.append("min_eig")
    buf.write(",".join(cols) + "\n")
    for k in range(traj.times.size):
        row = [traj.times[k], traj.emitter_population[k], *traj.mode_populations[:, k], traj.trace_drift[k]]
        if has_eig:
            row.append(traj.min_eigenvalue[k])
        buf.write(",".join(_f(v) for v in row) + "\n")
    return buf.getvalue()


def write_trajectory(path: str | Path, traj: Trajectory, meta: Mapping[str, object] | None = None) -> Path:
    path = Path(path)
    path.write_text(format_trajectory(traj, meta), encoding="utf-8")
    return path


def read_trajectory(source: str | Path) -> Trajectory:
    """Parse a trajectory CSV written by :func:`write_trajectory`."""
    text = Path(source).read_text(encoding="utf-8")
    header = None
    rows = []
    warns = []
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            if s.startswith("# warning: "):
                warns.append(s[len("# warning: "):])
            continue
        parts = [p.strip() for p in s.split(",")]
        if header is None:
            header = parts
            if header[:2] != ["t", "pop_emitter"] or "trace_drift" not in header:
                raise ParseError("header must start with t,pop_emitter and contain trace_drift", line=lineno)
            continue
        if len(parts) != len(header):
            raise ParseError(f"expected {len(header)} columns, got {len(parts)}", line=lineno)
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise ParseError(f"non-numeric entry in {s!r}", line=lineno) from None
    if header is None or not rows:
        raise ParseError(f"{source}: no trajectory data")
    data = np.array(rows)
    col = {name: i for i, name in enumerate(header)}
    modes = sorted((n for n in header if n.startswith("pop_mode_")), key=lambda n: int(n.rsplit("_", 1)[1]))
    try:
        return Trajectory(
            times=data[:, 0],
            emitter_population=data[:, 1],
            mode_populations=data[:, [col[n] for n in modes]].T if modes else np.zeros((0, len(rows))),
            trace_drift=data[:, col["trace_drift"]],
            min_eigenvalue=data[:, col["min_eig"]] if "min_eig" in col else None,
            warnings=warns,
        )
    except ValueError as exc:
        raise ParseError(f"{source}: {exc}") from None


def format_error_series(err: ErrorSeries, meta: Mapping[str, object] | None = None) -> str:
    meta = dict(meta or {})
    meta.update({f"summary_{k}": _f(v) for k, v in err.summary().items()})
    buf = io.StringIO()
    buf.write(metadata_header(meta))
    buf.write("t,eps_r,flag\n")
    for t, e, fl in zip(err.times, err.values, err.flagged):
        buf.write(f"{_f(t)},{_f(e)},{int(fl)}\n")
    return buf.getvalue()


def _clean(obj):
    if isinstance(obj, float):
        return None if not math.isfinite(obj) else obj
    if isinstance(obj, (np.floating, np.integer)):
        return _clean(obj.item())
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, Mapping):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def format_json(obj, meta: Mapping[str, object] | None = None) -> str:
    """Sorted, indented JSON; ``meta`` entries go under ``"_meta"``."""
    body = dict(_clean(obj))
    if meta:
        body["_meta"] = _clean(dict(meta))
    return json.dumps(body, sort_keys=True, indent=2) + "\n"


def write_json(path: str | Path, obj, meta: Mapping[str, object] | None = None) -> Path:
    path = Path(path)
    path.write_text(format_json(obj, meta), encoding="utf-8")
    return path


def iter_data_lines(text: str) -> Iterable[str]:
    """Lines of a text artifact that are not ``#`` metadata."""
    return (ln for ln in text.splitlines() if not ln.startswith("#"))
