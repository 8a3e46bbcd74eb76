"""Tests for deterministic plot emission from sweep tables and field
dumps."""

import filecmp

import numpy as np
import pytest

from nlap.fields import Field, Interval, Rect, build_grid, write_field
from nlap.horizon import CSV_HEADER, SweepResult, SweepRow, save_sweep
from nlap.plots import emit_plots

PI_SQUARED = np.pi ** 2


def fake_rows(lams=(9.0, 9.5, 9.8)):
    rows = []
    for i, lam in enumerate(lams):
        delta = 0.4 / 2 ** i
        rows.append(SweepRow(delta=delta, c_delta=1.0 / delta, lam=lam,
                             residual=1e-9, ref_lambda=PI_SQUARED,
                             eigfun_distance=0.1 / 2 ** i,
                             grid_h=delta / 8.0, runtime_s=0.01))
    return tuple(rows)


def write_sweep_csv(path, rows):
    result = SweepResult(config=None, rows=rows, reference=None, rate=None)
    save_sweep(result, path)


def sine_field(h=1 / 32, delta=0.25):
    grid = build_grid(Interval(0.0, 1.0), h, delta)
    x = grid.points()[..., 0]
    values = np.where(grid.domain_mask, np.sin(np.pi * x), 0.0)
    return Field(grid, values)


class TestSweepPlots:
    def test_plot_written(self, tmp_path):
        csv_path = tmp_path / "sweep.csv"
        write_sweep_csv(csv_path, fake_rows())
        written = emit_plots([csv_path], "sweep")
        assert written == [tmp_path / "sweep.svg"]
        assert written[0].exists()

    def test_deterministic_bytes(self, tmp_path):
        csv_path = tmp_path / "sweep.csv"
        write_sweep_csv(csv_path, fake_rows())
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        first = emit_plots([csv_path], "sweep", out_dir=tmp_path / "a")
        second = emit_plots([csv_path], "sweep", out_dir=tmp_path / "b")
        assert filecmp.cmp(first[0], second[0], shallow=False)

    def test_empty_table_refused_without_output(self, tmp_path):
        csv_path = tmp_path / "empty.csv"
        write_sweep_csv(csv_path, ())
        with pytest.raises(ValueError, match="no data rows"):
            emit_plots([csv_path], "sweep")
        assert list(tmp_path.glob("*.svg")) == []

    def test_malformed_table_refused(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="header"):
            emit_plots([bad], "sweep")
        assert list(tmp_path.glob("*.svg")) == []

    def test_zero_error_refused(self, tmp_path):
        csv_path = tmp_path / "flat.csv"
        write_sweep_csv(csv_path, fake_rows(lams=(PI_SQUARED, 9.5, 9.8)))
        with pytest.raises(ValueError, match="positive"):
            emit_plots([csv_path], "sweep")


class TestFieldPlots:
    def test_line_plot_deterministic(self, tmp_path):
        dump = tmp_path / "u.fld"
        write_field(sine_field(), dump)
        first = emit_plots([dump], "field", out_dir=tmp_path)
        assert first == [tmp_path / "u.svg"]
        other = tmp_path / "again"
        other.mkdir()
        second = emit_plots([dump], "field", out_dir=other)
        assert filecmp.cmp(first[0], second[0], shallow=False)

    def test_heatmap_written(self, tmp_path):
        grid = build_grid(Rect((0.0, 0.0), (1.0, 1.0)), 1 / 16, 0.25)
        values = np.where(grid.domain_mask,
                          np.sin(np.pi * grid.points()[..., 0]), 0.0)
        dump = tmp_path / "u2.fld"
        write_field(Field(grid, values), dump)
        written = emit_plots([dump], "field")
        assert written == [tmp_path / "u2.svg"]
        assert written[0].exists()

    def test_vector_dump_refused(self, tmp_path):
        grid = build_grid(Interval(0.0, 1.0), 1 / 16, 0.25)
        vec = Field(grid, np.zeros(grid.shape + (1,)))
        dump = tmp_path / "g.fld"
        write_field(vec, dump)
        with pytest.raises(ValueError, match="scalar"):
            emit_plots([dump], "field")

    def test_unknown_kind_refused(self, tmp_path):
        with pytest.raises(ValueError, match="unknown plot kind"):
            emit_plots([], "surface")
