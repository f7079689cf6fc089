import numpy as np
import pytest

from celltraffic import traffic as tr
from celltraffic.errors import FormatError, NegativeVolume, UnknownCell
from celltraffic.stable import StableParams, estimate_quantile, ks_test
from conftest import IM_PARAMS, VIDEO_PARAMS


def write(path, text):
    path.write_text(text, encoding="utf-8")


CELLS = "cell_id,lat,lon\na,30.0,120.0\nb,30.01,120.02\n"


class TestIngest:
    def test_well_formed(self, tmp_path):
        write(tmp_path / "c.csv", CELLS)
        write(
            tmp_path / "t.csv",
            "timestamp,cell_id,service,bytes\n"
            "0,a,IM,10\n0,b,IM,20\n300,a,IM,11\n600,b,IM,22\n",
        )
        m = tr.ingest_csv(tmp_path / "t.csv", tmp_path / "c.csv")
        assert m.resolution_seconds == 300
        assert m.start_timestamp == 0
        assert m.service_label == "IM"
        np.testing.assert_array_equal(m.values, [[10, 11, 0], [20, 0, 22]])

    def test_duplicates_summed(self, tmp_path):
        write(tmp_path / "c.csv", CELLS)
        write(
            tmp_path / "t.csv",
            "timestamp,cell_id,service,bytes\n0,a,IM,10\n0,a,IM,5\n300,b,IM,1\n",
        )
        m = tr.ingest_csv(tmp_path / "t.csv", tmp_path / "c.csv")
        assert m.values[0, 0] == 15

    def test_negative_volume_names_line(self, tmp_path):
        write(tmp_path / "c.csv", CELLS)
        write(
            tmp_path / "t.csv",
            "timestamp,cell_id,service,bytes\n0,a,IM,10\n300,a,IM,-5\n",
        )
        with pytest.raises(NegativeVolume, match="line 3"):
            tr.ingest_csv(tmp_path / "t.csv", tmp_path / "c.csv")

    def test_unknown_cell(self, tmp_path):
        write(tmp_path / "c.csv", CELLS)
        write(tmp_path / "t.csv", "timestamp,cell_id,service,bytes\n0,zz,IM,10\n")
        with pytest.raises(UnknownCell):
            tr.ingest_csv(tmp_path / "t.csv", tmp_path / "c.csv")

    def test_malformed_row(self, tmp_path):
        write(tmp_path / "c.csv", CELLS)
        write(tmp_path / "t.csv", "timestamp,cell_id,service,bytes\n0,a,IM\n")
        with pytest.raises(FormatError, match="line 2"):
            tr.ingest_csv(tmp_path / "t.csv", tmp_path / "c.csv")

    def test_bad_header(self, tmp_path):
        write(tmp_path / "c.csv", CELLS)
        write(tmp_path / "t.csv", "time,cell,svc,b\n")
        with pytest.raises(FormatError, match="line 1"):
            tr.ingest_csv(tmp_path / "t.csv", tmp_path / "c.csv")

    def test_multiple_services_need_filter(self, tmp_path):
        write(tmp_path / "c.csv", CELLS)
        write(
            tmp_path / "t.csv",
            "timestamp,cell_id,service,bytes\n0,a,IM,10\n300,a,web,5\n",
        )
        with pytest.raises(FormatError, match="multiple services"):
            tr.ingest_csv(tmp_path / "t.csv", tmp_path / "c.csv")
        m = tr.ingest_csv(
            tmp_path / "t.csv", tmp_path / "c.csv", service="web", resolution_seconds=300
        )
        assert m.service_label == "web"
        assert m.n_intervals == 1

    def test_duplicate_cell_id(self, tmp_path):
        write(tmp_path / "c.csv", CELLS + "a,31.0,121.0\n")
        write(tmp_path / "t.csv", "timestamp,cell_id,service,bytes\n0,a,IM,1\n")
        with pytest.raises(FormatError, match="duplicate"):
            tr.ingest_csv(tmp_path / "t.csv", tmp_path / "c.csv")

    def test_merge_colocated(self, tmp_path):
        write(tmp_path / "c.csv", CELLS + "c,30.0,120.0\n")
        write(
            tmp_path / "t.csv",
            "timestamp,cell_id,service,bytes\n0,a,IM,10\n0,c,IM,7\n300,b,IM,1\n",
        )
        merged = tr.ingest_csv(tmp_path / "t.csv", tmp_path / "c.csv", merge_colocated=True)
        assert merged.n_cells == 2
        assert merged.values[0, 0] == 17

    def test_rows_follow_cells_file_order(self, tmp_path):
        write(tmp_path / "c.csv", "cell_id,lat,lon\nzz,30.0,120.0\naa,30.1,120.1\n")
        write(
            tmp_path / "t.csv",
            "timestamp,cell_id,service,bytes\n0,aa,IM,1\n0,zz,IM,2\n300,aa,IM,3\n",
        )
        m = tr.ingest_csv(tmp_path / "t.csv", tmp_path / "c.csv")
        assert [c.cell_id for c in m.cells] == ["zz", "aa"]
        np.testing.assert_array_equal(m.values, [[2, 0], [1, 3]])


class TestRoundTrip:
    def test_bit_exact(self, tmp_path, small_matrix):
        tr.emit_traffic_csv(small_matrix, tmp_path / "t.csv")
        tr.emit_cells_csv(small_matrix, tmp_path / "c.csv")
        back = tr.ingest_csv(tmp_path / "t.csv", tmp_path / "c.csv")
        np.testing.assert_array_equal(back.values, small_matrix.values)
        assert back.cells == small_matrix.cells
        assert back.resolution_seconds == small_matrix.resolution_seconds
        assert back.start_timestamp == small_matrix.start_timestamp
        assert back.service_label == small_matrix.service_label

    def test_bit_exact_with_zero_columns(self, tmp_path):
        cells = (tr.CellMeta("a", 30.0, 120.0), tr.CellMeta("b", 30.1, 120.1))
        values = np.array([[1.25, 0.0, 0.0, 3.5], [0.0, 0.0, 0.0, 0.125]])
        m = tr.TrafficMatrix(cells, 60, 500, values, "video")
        tr.emit_traffic_csv(m, tmp_path / "t.csv")
        tr.emit_cells_csv(m, tmp_path / "c.csv")
        back = tr.ingest_csv(tmp_path / "t.csv", tmp_path / "c.csv")
        np.testing.assert_array_equal(back.values, m.values)
        assert back.resolution_seconds == 60
        assert back.start_timestamp == 500

    def test_synthetic_round_trip(self, tmp_path, im_matrix):
        tr.emit_traffic_csv(im_matrix, tmp_path / "t.csv")
        tr.emit_cells_csv(im_matrix, tmp_path / "c.csv")
        back = tr.ingest_csv(tmp_path / "t.csv", tmp_path / "c.csv")
        np.testing.assert_array_equal(back.values, im_matrix.values)
        assert back.cells == im_matrix.cells

    def test_wide_csv_shape(self, tmp_path, small_matrix):
        tr.emit_wide_csv(small_matrix, tmp_path / "w.csv")
        lines = (tmp_path / "w.csv").read_text().splitlines()
        assert len(lines) == 1 + small_matrix.n_cells
        header = lines[0].split(",")
        assert header[0] == "cell_id"
        assert len(header) == 1 + small_matrix.n_intervals
        assert header[1].startswith("1970-01-01T00:16:40")


class TestSynthetic:
    def test_deterministic(self, im_scenario):
        a = tr.generate_synthetic(im_scenario, seed=42)
        b = tr.generate_synthetic(im_scenario, seed=42)
        np.testing.assert_array_equal(a.values, b.values)
        assert a.cells == b.cells

    def test_shape_and_nonnegative(self, im_matrix):
        assert im_matrix.values.shape == (113, 288)
        assert im_matrix.values.min() >= 0.0

    def test_per_cell_alpha_recovery(self, im_matrix):
        ok = 0
        for i in range(im_matrix.n_cells):
            est = estimate_quantile(im_matrix.values[i])
            ok += abs(est.alpha - 1.61) <= 0.25
        assert ok >= 0.8 * im_matrix.n_cells

    def test_degenerate_constant(self):
        spec = tr.ScenarioSpec(
            5, 10, 300, "IM", StableParams(1.5, 0, 0.0, 3.25),
            hotspot_count=0, dictionary_rank=2, flat_profile=True,
        )
        m = tr.generate_synthetic(spec, seed=1)
        np.testing.assert_array_equal(m.values, np.full((5, 10), 3.25))

    def test_truth_structure(self, im_scenario):
        truth = tr.generate_synthetic_truth(im_scenario, seed=3)
        assert truth.dictionary.shape == (113, 8)
        norms = np.linalg.norm(truth.dictionary, axis=0)
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)
        active_rows = np.flatnonzero(np.any(truth.codes != 0, axis=1))
        assert active_rows.size == im_scenario.hotspot_count
        np.testing.assert_array_equal(
            truth.matrix.values, tr.generate_synthetic(im_scenario, seed=3).values
        )

    def test_profile_shape(self):
        p = tr.diurnal_profile(288, 300)
        assert p.min() >= 0.1 - 1e-12
        assert p.max() == pytest.approx(1.0)


class TestQuantizedCdf:
    def test_point_mass(self):
        uppers, cum = tr.quantized_cdf(np.full(50, 7.0), 100)
        assert uppers[0] == 7.0
        assert cum[0] == 1.0
        assert cum[-1] == 1.0

    def test_uniform_grid(self):
        uppers, cum = tr.quantized_cdf(np.arange(100.0), 100)
        for idx in (9, 49, 89):
            assert abs(cum[idx] - (idx + 1) / 100) <= 1 / 100 + 1e-12

    def test_monotone_ends_at_one(self):
        rng = np.random.default_rng(4)
        v = rng.exponential(5.0, 333)
        _, cum = tr.quantized_cdf(v, 60)
        assert np.all(np.diff(cum) >= 0)
        assert cum[-1] == 1.0

    def test_matches_ks_statistic(self):
        # cross-module consistency: recomputing the quantized gap by hand
        # reproduces the ks_test statistic exactly
        from celltraffic.stable import cdf, sample

        x = sample(IM_PARAMS, 3000, seed=77)
        stat, _ = ks_test(x, IM_PARAMS, quantization_levels=100)
        nonneg = x[x >= 0]
        uppers, cum = tr.quantized_cdf(nonneg, 100)
        f0 = cdf(IM_PARAMS, 0.0)
        model = np.clip((cdf(IM_PARAMS, uppers) - f0) / (1 - f0), 0.0, 1.0)
        assert stat == np.max(np.abs(cum - model))


def test_gini_contrast_video_vs_im():
    # few-hotspot video layouts concentrate density more than many-hotspot
    # IM layouts at equal size, seed by seed on average
    from celltraffic.voronoi import voronoi_sparsity

    video_g, im_g = [], []
    for seed in range(10):
        mv = tr.generate_synthetic(
            tr.ScenarioSpec(60, 48, 300, "video", VIDEO_PARAMS, 2, 8), seed
        )
        mi = tr.generate_synthetic(
            tr.ScenarioSpec(60, 48, 300, "IM", IM_PARAMS, 8, 8), seed
        )
        video_g.append(voronoi_sparsity(mv, 24).gini)
        im_g.append(voronoi_sparsity(mi, 24).gini)
    assert np.mean(video_g) > np.mean(im_g)


def test_matrix_validation():
    cells = (tr.CellMeta("a", 0.0, 0.0),)
    with pytest.raises(ValueError):
        tr.TrafficMatrix(cells, 300, 0, np.array([[-1.0]]), "IM")
    with pytest.raises(ValueError):
        tr.TrafficMatrix(cells, 0, 0, np.array([[1.0]]), "IM")
    with pytest.raises(ValueError):
        tr.CellMeta("a", 99.0, 0.0)
