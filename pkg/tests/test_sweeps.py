import io
import math

import pytest

from sandglass.errors import EmptyTable
from sandglass.sweeps import (
    SNAP_COLUMNS,
    SweepRow,
    argmax_designs,
    read_csv,
    snap_row,
    sweep_shake_table,
    sweep_snap,
    worker_count,
    write_csv,
)


def test_snap_row_valid():
    row = snap_row(3, 0.75)
    assert row.valid
    assert row.Q2 == pytest.approx((3 - 2 * math.sqrt(2)) / 4, abs=1e-15)
    assert row.negative_eigenvalues == 1
    assert row.open_intersection_free and row.closed_touching and row.monotone_path
    assert abs(row.closed_factor_value) < 1e-9


def test_snap_row_failure():
    row = snap_row(3, 0.3)
    assert row.failure == "NO_REALIZATION"
    assert math.isnan(row.sigma)
    assert not row.valid


def test_sweep_sorted_and_deterministic(monkeypatch):
    monkeypatch.setenv("SANDGLASS_THREADS", "1")
    a = sweep_snap([4, 3], 0.3, 0.36, 0.02)
    assert [(r.n, r.Q1) for r in a] == sorted((r.n, r.Q1) for r in a)
    assert len(a) == 6
    b = sweep_snap([3, 4], 0.3, 0.36, 0.02)
    assert [r.sigma for r in a] == pytest.approx([r.sigma for r in b], nan_ok=True, rel=0, abs=0)


def test_worker_cap(monkeypatch):
    monkeypatch.setenv("SANDGLASS_THREADS", "1")
    assert worker_count(8) == 1
    monkeypatch.delenv("SANDGLASS_THREADS")
    assert worker_count(1) == 1


def test_csv_roundtrip(tmp_path):
    rows = [snap_row(3, 0.75), snap_row(3, 0.3)]
    p = tmp_path / "snap.csv"
    write_csv(p, rows, header_comment="sandglass test\nsecond line")
    text = p.read_text()
    assert text.startswith("# sandglass test\n# second line\n")
    back = read_csv(p)
    assert list(back[0]) == list(SNAP_COLUMNS)
    assert back[0]["sigma"] == rows[0].sigma  # 17 significant digits round-trip exactly
    assert back[0]["open_intersection_free"] == 1
    assert math.isnan(back[1]["sigma"]) and back[1]["failure"] == "NO_REALIZATION"


def test_csv_stream_and_dicts():
    buf = io.StringIO()
    write_csv(buf, [{"n": 3, "Q1": 0.1 + 0.2, "failure": ""}])
    assert buf.getvalue() == "n,Q1,failure\n3,0.30000000000000004,\n"
    with pytest.raises(EmptyTable):
        write_csv(io.StringIO(), [])


def rows_of(values):
    return [SweepRow(n=n, Q1=q, sigma=s) for n, q, s in values]


def test_argmax_ties_prefer_smaller_q1():
    rows = rows_of([(3, 0.5, 1.0), (3, 0.4, 1.0), (3, 0.6, 0.5), (4, 0.7, 2.0)])
    best = argmax_designs(rows)
    assert best[3].Q1 == 0.4 and best[4].Q1 == 0.7


def test_argmax_scale_invariant():
    rows = rows_of([(3, 0.5, 1.0), (3, 0.4, 3.0), (5, 0.6, 0.5), (5, 0.7, 0.2)])
    scaled = rows_of([(r.n, r.Q1, 1e-4 * r.sigma) for r in rows])
    assert {n: r.Q1 for n, r in argmax_designs(rows).items()} == {n: r.Q1 for n, r in argmax_designs(scaled).items()}


def test_argmax_skips_invalid_and_empty():
    rows = rows_of([(3, 0.5, float("nan"))]) + [SweepRow(n=3, Q1=0.6, sigma=9.0, failure="NO_SADDLE")]
    with pytest.raises(EmptyTable):
        argmax_designs(rows)
    assert argmax_designs(rows + rows_of([(3, 0.7, 0.1)]))[3].Q1 == 0.7


def test_shake_table():
    rows = sweep_shake_table([4, 3], 0.25, 0.254, 0.002)
    assert [(r["n"], r["Q1"]) for r in rows] == [(3, 0.252), (3, 0.254), (4, 0.252), (4, 0.254)]
    assert argmax_designs(rows, "kappa")[3]["kappa"] > 0
