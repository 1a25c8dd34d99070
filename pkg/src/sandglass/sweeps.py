"""Parameter sweeps over Q1 for the snap and shake analyses, and their CSV tables."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

from .errors import EmptyTable
from .shake import SHAKE_COLUMNS, q1_grid, sweep_shake
from .snap import FAILURE_CODES, failure_code, snap_pair

NAN = math.nan


@dataclass
class SweepRow:
    n: int
    Q1: float
    Q2: float = NAN
    Q3: float = NAN
    open_H: float = NAN
    open_h: float = NAN
    open_r: float = NAN
    closed_H: float = NAN
    closed_h: float = NAN
    closed_r: float = NAN
    sigma: float = NAN
    saddle_H: float = NAN
    saddle_h: float = NAN
    saddle_r: float = NAN
    S1: float = NAN
    S2: float = NAN
    S3: float = NAN
    V_open: float = NAN
    V_closed: float = NAN
    rel_dvol: float = NAN
    rel_dheight: float = NAN
    rel_dwaist: float = NAN
    grad_norm: float = NAN
    negative_eigenvalues: int = -1
    saddle_discriminant: float = NAN
    open_intersection_free: bool = False
    closed_touching: bool = False
    closed_tetra_volume: float = NAN
    closed_factor_value: float = NAN
    monotone_path: bool = False
    failure: str = ""

    @property
    def valid(self) -> bool:
        return not self.failure


SNAP_COLUMNS = tuple(f.name for f in fields(SweepRow))


def snap_row(n: int, Q1: float) -> SweepRow:
    """Evaluate one grid point; domain failures become a failure code."""
    row = SweepRow(n=n, Q1=Q1)
    try:
        res = snap_pair(n, Q1)
    except tuple(FAILURE_CODES) as exc:
        row.failure = failure_code(exc)
        return row
    spec = res.spec
    m = res.appendix_measures()
    row.Q2, row.Q3 = spec.Q2, spec.Q3
    row.open_H, row.open_h, row.open_r = map(float, res.open.coords)
    row.closed_H, row.closed_h, row.closed_r = map(float, res.closed.coords)
    row.sigma = res.sigma
    row.saddle_H, row.saddle_h, row.saddle_r = map(float, res.saddle)
    row.S1, row.S2, row.S3 = map(float, res.saddle_lengths)
    for key in ("V_open", "V_closed", "rel_dvol", "rel_dheight", "rel_dwaist"):
        setattr(row, key, float(m[key]))
    row.grad_norm = res.grad_norm
    row.negative_eigenvalues = int((res.hessian_eigenvalues < 0).sum())
    row.saddle_discriminant = res.saddle_discriminant
    row.open_intersection_free = bool(res.flags["open_intersection_free"])
    row.closed_touching = bool(res.flags["closed_touching"])
    row.closed_tetra_volume = float(res.flags["closed_tetra_volume"])
    row.closed_factor_value = float(2 * res.closed.H * res.closed.r * spec.s + res.closed.h)
    row.monotone_path = bool(res.flags["monotone_path"])
    return row


def _snap_task(args):
    return snap_row(*args)


def worker_count(requested: int | None = None) -> int:
    """Requested workers, capped by SANDGLASS_THREADS and the CPU count."""
    cap = os.environ.get("SANDGLASS_THREADS")
    limit = os.cpu_count() or 1
    if cap:
        limit = min(limit, max(1, int(cap)))
    return max(1, min(requested or limit, limit))


def sweep_snap(ns, q1_min: float = 0.25, q1_max: float = 5.0, step: float = 0.01, workers: int | None = None) -> list:
    """Rows for every n in `ns` and grid point Q1 in ]q1_min, q1_max], sorted by (n, Q1)."""
    if isinstance(ns, int):
        ns = [ns]
    tasks = [(int(n), float(q)) for n in ns for q in q1_grid(q1_min, q1_max, step)]
    w = worker_count(workers)
    if w > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=w) as pool:
            rows = list(pool.map(_snap_task, tasks, chunksize=8))
    else:
        rows = [_snap_task(t) for t in tasks]
    rows.sort(key=lambda r: (r.n, r.Q1))
    return rows


def sweep_shake_table(ns, q1_min: float = 0.25, q1_max: float = 0.31, step: float = 0.001) -> list:
    if isinstance(ns, int):
        ns = [ns]
    rows = []
    for n in ns:
        rows += sweep_shake(int(n), q1_min, q1_max, step)
    rows.sort(key=lambda r: (r["n"], r["Q1"]))
    return rows


def _get(row, key):
    return row[key] if isinstance(row, dict) else getattr(row, key)


def _is_valid(row, key):
    v = _get(row, key)
    return not _get(row, "failure") and isinstance(v, (int, float)) and math.isfinite(v)


def argmax_designs(rows, key: str = "sigma") -> dict:
    """Per n, the valid row with the largest `key`; ties go to the smaller Q1."""
    best = {}
    for row in rows:
        if not _is_valid(row, key):
            continue
        n = _get(row, "n")
        cur = best.get(n)
        val, q1 = _get(row, key), _get(row, "Q1")
        if cur is None or val > _get(cur, key) or (val == _get(cur, key) and q1 < _get(cur, "Q1")):
            best[n] = row
    if not best:
        raise EmptyTable(f"no valid rows with a finite {key!r}")
    return dict(sorted(best.items()))


# ---------------------------------------------------------------------------
# CSV


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return "%.17g" % v
    return str(v)


def write_csv(target, rows, columns=None, header_comment: str | None = None) -> None:
    """Comma separated, 17 significant digits, NaN as "nan"; columns in field order.

    `target` is a path or an open text stream.
    """
    rows = list(rows)
    if columns is None:
        if rows and not isinstance(rows[0], dict):
            columns = tuple(f.name for f in fields(rows[0]))
        elif rows:
            columns = tuple(rows[0])
        else:
            raise EmptyTable("nothing to write")
    if hasattr(target, "write"):
        _write_rows(target, rows, columns, header_comment)
    else:
        with open(target, "w", newline="") as fh:
            _write_rows(fh, rows, columns, header_comment)


def _write_rows(fh, rows, columns, header_comment):
    if header_comment:
        for line in header_comment.splitlines():
            fh.write(f"# {line}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        d = row if isinstance(row, dict) else asdict(row)
        w.writerow([_fmt(d[c]) for c in columns])


def _parse(v: str):
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v


def read_csv(path) -> list:
    """Rows as dicts; numeric fields parsed, "nan" becomes float NaN, comment lines skipped."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return [{k: _parse(v) for k, v in row.items()} for row in reader]


__all__ = [
    "SweepRow",
    "SNAP_COLUMNS",
    "SHAKE_COLUMNS",
    "snap_row",
    "sweep_snap",
    "sweep_shake_table",
    "argmax_designs",
    "write_csv",
    "read_csv",
    "worker_count",
]
