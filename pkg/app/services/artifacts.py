"""On-disk formats: norms series, per-time snapshots and JSON records.

Floats are written with repr so two identical runs produce byte-identical
files and every value reparses exactly.
"""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from app.models.errors import ConfigError, Violation
from app.models.schemas import NormReport, State

NORMS_HEADER = ["t", "u_l1", "u_l2", "u_sup", "v_l1", "v_l2", "v_sup"]
SNAPSHOT_HEADER = ["x", "u", "v"]

_SNAPSHOT_NAME = re.compile(r"^snapshot_t(?P<t>[-+0-9.eE]+)\.csv$")


def _fmt(value: float) -> str:
    return repr(float(value))


def lq_column(q: float) -> str:
    return f"v_lq{q:g}"


def write_norms_csv(path: Path, rows: Sequence[NormReport], lebesgue_qs: Sequence[float] = ()) -> None:
    header = NORMS_HEADER + [lq_column(q) for q in lebesgue_qs]
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for r in rows:
            writer.writerow(
                [_fmt(r.t), _fmt(r.u_l1), _fmt(r.u_l2), _fmt(r.u_sup),
                 _fmt(r.v_l1), _fmt(r.v_l2), _fmt(r.v_sup)]
                + [_fmt(r.v_lq[float(q)]) for q in lebesgue_qs]
            )


def read_norms_csv(path: Path) -> list[dict[str, float]]:
    with open(path, newline="", encoding="utf-8") as f:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(f)]


def snapshot_filename(t: float) -> str:
    return f"snapshot_t{t:.10g}.csv"


def parse_snapshot_time(path: Path) -> Optional[float]:
    match = _SNAPSHOT_NAME.match(Path(path).name)
    if match is None:
        return None
    try:
        return float(match.group("t"))
    except ValueError:
        return None


def write_snapshot(path: Path, x: np.ndarray, state: State) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SNAPSHOT_HEADER)
        for xi, ui, vi in zip(x, state.u, state.v):
            writer.writerow([_fmt(xi), _fmt(ui), _fmt(vi)])


def _malformed(path: Path, message: str) -> ConfigError:
    return ConfigError([Violation(code="PARSE_ERROR", field=str(path), message=message)])


def read_snapshot(path: Path) -> tuple[Optional[float], np.ndarray, np.ndarray, np.ndarray]:
    """(t from the file name or None, x, u, v). Malformed files raise ConfigError."""
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
    except OSError as e:
        raise _malformed(path, f"cannot read snapshot: {e}") from e
    if not rows or rows[0] != SNAPSHOT_HEADER:
        raise _malformed(path, f"expected header {','.join(SNAPSHOT_HEADER)}")
    try:
        data = np.array([[float(c) for c in row] for row in rows[1:] if row], dtype=np.float64)
    except ValueError as e:
        raise _malformed(path, f"non-numeric value: {e}") from e
    if data.size == 0:
        data = data.reshape(0, 3)
    if data.ndim != 2 or data.shape[1] != 3:
        raise _malformed(path, "every row needs exactly three columns")
    return parse_snapshot_time(path), data[:, 0], data[:, 1], data[:, 2]


def write_json(path: Path, payload: Any) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def read_json(path: Path) -> Any:
    with open(path, encoding="utf-8") as f:
        return json.load(f)
