import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coalmap.assessment import (ConfusionMatrix, CoordinateSpace, PolygonSet, SamplePoint, Truth,
                                evaluate, evaluate_full, metrics, point_in_polygon,
                                read_polygons, strata, stratified_sample)
from coalmap.errors import ConfigError, DataError
from coalmap.raster import EC, NODATA, NON_EC, BinaryMask

from oracles import f1_from_counts, winding_number
from accuracy_table import ROWS

SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1), (0, 0)]
L_SHAPE = [(0, 0), (4, 0), (4, 1), (1, 1), (1, 4), (0, 4)]


class TestPointInPolygon:
    def test_inside(self):
        assert point_in_polygon((0.5, 0.5), SQUARE)

    def test_outside(self):
        assert not point_in_polygon((2, 2), SQUARE)

    @pytest.mark.parametrize("p", [(0, 0), (1, 1), (0.5, 0), (1, 0.25)])
    def test_boundary_excluded(self, p):
        assert not point_in_polygon(p, SQUARE)

    def test_degenerate(self):
        with pytest.raises(DataError):
            point_in_polygon((0, 0), [(0, 0), (1, 1), (0, 0)])
        with pytest.raises(DataError):
            point_in_polygon((0, 0), [(0, 0), (1, 1), (2, 2)])

    @given(st.fractions(-1, 5, max_denominator=8), st.fractions(-1, 5, max_denominator=8))
    @settings(max_examples=400)
    def test_matches_winding_oracle(self, x, y):
        wn = winding_number((x, y), L_SHAPE)
        got = point_in_polygon((float(x), float(y)), L_SHAPE)
        assert got == (wn is not None and wn % 2 == 1)

    def test_open_and_closed_rings_agree(self):
        assert point_in_polygon((0.5, 2), L_SHAPE) == point_in_polygon((0.5, 2), L_SHAPE + [(0, 0)])


class TestStrata:
    def test_rectangle(self):
        interior, exterior = strata((10, 10), [[(2, 2), (6, 2), (6, 5), (2, 5)]])
        # pixels 2..5 x 2..4 have centres inside; edge-touching ones are dropped
        assert interior.sum() == 2 * 1
        assert interior[3, 3] and interior[3, 4]
        assert not exterior[1, 1] and not exterior[5, 6]
        assert exterior[0, 0] and exterior[9, 9]
        assert not (interior & exterior).any()

    def test_strata_match_oracle(self):
        ring = [(1.3, 0.7), (8.6, 2.2), (6.1, 8.9), (2.4, 6.5)]
        interior, exterior = strata((10, 10), [ring])
        for r, c in np.ndindex(10, 10):
            corners = [(c + dx, r + dy) for dx in (0, 0.5, 1) for dy in (0, 0.5, 1)]
            wns = [winding_number((Fraction(x), Fraction(y)), ring) for x, y in corners]
            if interior[r, c]:
                assert all(w is not None and w % 2 == 1 for w in wns)
            if exterior[r, c]:
                assert all(w == 0 for w in wns)


class TestStratifiedSample:
    polys = PolygonSet([[(5, 5), (30, 5), (30, 30), (5, 30)]])

    def test_default_counts(self):
        pts = stratified_sample((60, 60), self.polys, rng_seed=1)
        assert len(pts) == 750
        assert sum(p.truth is Truth.EC for p in pts) == 300
        assert sum(p.truth is Truth.BACKGROUND for p in pts) == 450

    def test_membership_and_uniqueness(self):
        pts = stratified_sample((60, 60), self.polys, rng_seed=2)
        ring = self.polys.polygons[0]
        for p in pts:
            inside = point_in_polygon((p.col + 0.5, p.row + 0.5), ring)
            assert inside == (p.truth is Truth.EC)
        assert len({(p.col, p.row) for p in pts}) == len(pts)

    def test_deterministic(self):
        a = stratified_sample((60, 60), self.polys, rng_seed=42)
        b = stratified_sample((60, 60), self.polys, rng_seed=42)
        c = stratified_sample((60, 60), self.polys, rng_seed=43)
        assert a == b
        assert a != c

    def test_no_ec(self):
        pts = stratified_sample((60, 60), self.polys, n_ec=0, n_bg=20)
        assert len(pts) == 20 and all(p.truth is Truth.BACKGROUND for p in pts)

    def test_insufficient_interior(self):
        with pytest.raises(DataError):
            stratified_sample((60, 60), self.polys, n_ec=10_000)

    def test_insufficient_exterior(self):
        with pytest.raises(DataError):
            stratified_sample((32, 32), self.polys, n_bg=5000)

    def test_empty_polygons(self):
        with pytest.raises(DataError):
            stratified_sample((10, 10), PolygonSet([]), n_ec=1)

    def test_geo_polygons_need_transform(self):
        geo = PolygonSet([[(0, 0), (1, 0), (1, 1)]], CoordinateSpace.GEO)
        with pytest.raises(ConfigError):
            geo.to_pixel(None)
        with pytest.raises(ConfigError):
            stratified_sample((10, 10), geo)


class TestReadPolygons:
    def test_geojson_to_pixel(self, tmp_path):
        gt = (1000.0, 30.0, 0.0, 2000.0, 0.0, -30.0)
        ring = [[1000 + 30 * 2, 2000 - 30 * 2], [1000 + 30 * 8, 2000 - 30 * 2],
                [1000 + 30 * 8, 2000 - 30 * 6], [1000 + 30 * 2, 2000 - 30 * 6],
                [1000 + 30 * 2, 2000 - 30 * 2]]
        doc = {"type": "FeatureCollection", "features": [
            {"type": "Feature", "properties": {},
             "geometry": {"type": "Polygon", "coordinates": [ring]}}]}
        path = tmp_path / "p.geojson"
        path.write_text(json.dumps(doc))
        polys = read_polygons(path)
        assert polys.coordinate_space is CoordinateSpace.GEO
        pix = polys.to_pixel(gt)
        np.testing.assert_allclose(pix.polygons[0], [(2, 2), (8, 2), (8, 6), (2, 6)], atol=1e-9)

    def test_multipolygon(self, tmp_path):
        sq = [[0, 0], [1, 0], [1, 1], [0, 1], [0, 0]]
        doc = {"type": "MultiPolygon", "coordinates": [[sq], [[[x + 5, y] for x, y in sq]]]}
        path = tmp_path / "p.geojson"
        path.write_text(json.dumps(doc))
        assert len(read_polygons(path).polygons) == 2

    def test_pixel_json(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text(json.dumps({"coordinate_space": "pixel", "polygons": [SQUARE]}))
        polys = read_polygons(path)
        assert polys.coordinate_space is CoordinateSpace.PIXEL
        assert polys.to_pixel(None) is polys

    def test_bad_geometry(self, tmp_path):
        path = tmp_path / "p.geojson"
        path.write_text(json.dumps({"type": "Point", "coordinates": [0, 0]}))
        with pytest.raises(ConfigError):
            read_polygons(path)


def _samples(n_ec, n_bg):
    return ([SamplePoint(i, 0, Truth.EC) for i in range(n_ec)]
            + [SamplePoint(i, 1, Truth.BACKGROUND) for i in range(n_bg)])


class TestEvaluate:
    def test_perfect(self):
        mask = np.zeros((2, 450), np.uint8)
        mask[0, :300] = EC
        assert evaluate(BinaryMask(mask), _samples(300, 450)) == ConfusionMatrix(300, 0, 0, 450)

    def test_all_negative(self):
        mask = BinaryMask(np.zeros((2, 450), np.uint8))
        assert evaluate(mask, _samples(300, 450)) == ConfusionMatrix(0, 0, 300, 450)

    def test_partial_hits(self):
        mask = np.zeros((2, 450), np.uint8)
        mask[0, :99] = EC
        assert evaluate(BinaryMask(mask), _samples(300, 450)) == ConfusionMatrix(99, 0, 201, 450)

    def test_nodata_excluded(self):
        mask = np.zeros((2, 450), np.uint8)
        mask[0, :10] = NODATA
        mask[1, :5] = NODATA
        m = evaluate(BinaryMask(mask), _samples(300, 450))
        assert m == ConfusionMatrix(0, 0, 290, 445, n_nodata=15)
        assert m.total == 735

    def test_out_of_bounds(self):
        with pytest.raises(DataError):
            evaluate(BinaryMask(np.zeros((2, 2))), [SamplePoint(5, 0, Truth.EC)])

    def test_full_raster(self):
        pred = np.array([[EC, EC, NON_EC, NODATA]], np.uint8)
        truth = np.array([[EC, NON_EC, EC, EC]], np.uint8)
        assert evaluate_full(BinaryMask(pred), BinaryMask(truth)) == ConfusionMatrix(1, 1, 1, 0, 1)


class TestMetrics:
    @pytest.mark.parametrize("row", ROWS, ids=lambda r: f"{r[0]}-{r[1]}-{r[2]}")
    def test_accuracy_table_rows(self, row):
        _, _, _, ua, pa, f1, oa, counts = row
        rep = metrics(ConfusionMatrix(*counts))
        assert rep.pa == pytest.approx(pa, abs=0.005)
        assert 100 * rep.f1 == pytest.approx(f1, abs=0.05)
        assert rep.oa == pytest.approx(oa, abs=0.05)
        if ua is None:
            assert not rep.ua_defined and rep.ua is None
        else:
            assert rep.ua == pytest.approx(ua, abs=0.005)

    def test_acmi_averages(self):
        reps = [metrics(ConfusionMatrix(*r[7])) for r in ROWS if r[2] == "ACMI"]
        assert np.mean([r.ua for r in reps]) == pytest.approx(99.24, abs=0.005)
        assert np.mean([r.pa for r in reps]) == pytest.approx(92.50, abs=0.005)
        assert np.mean([r.f1 for r in reps]) == pytest.approx(0.96, abs=0.005)
        assert np.mean([r.oa for r in reps]) == pytest.approx(96.70, abs=0.005)

    def test_perfect(self):
        rep = metrics(ConfusionMatrix(300, 0, 0, 450))
        assert (rep.ua, rep.pa, rep.oa, rep.f1) == (100.0, 100.0, 100.0, 1.0)

    def test_zero_pa_with_false_alarms(self):
        rep = metrics(ConfusionMatrix(0, 5, 300, 445))
        assert rep.ua == 0.0 and rep.pa == 0.0 and rep.f1 == 0.0

    def test_errors(self):
        with pytest.raises(DataError):
            metrics(ConfusionMatrix())
        with pytest.raises(DataError):
            metrics(ConfusionMatrix(0, 3, 0, 10))
        with pytest.raises(DataError):
            ConfusionMatrix(-1, 0, 0, 0)

    @given(st.integers(1, 500), st.integers(0, 500), st.integers(0, 500), st.integers(0, 500))
    def test_f1_identity(self, tp, fp, fn, tn):
        rep = metrics(ConfusionMatrix(tp, fp, fn, tn))
        assert abs(rep.f1 - f1_from_counts(tp, fp, fn)) <= 1e-12
        assert 0 <= rep.f1 <= 1
        assert all(0 <= v <= 100 for v in (rep.ua, rep.pa, rep.oa))

    @given(st.integers(1, 1000), st.integers(1, 1000))
    def test_all_negative_oa(self, n_ec, n_bg):
        rep = metrics(ConfusionMatrix(0, 0, n_ec, n_bg))
        assert rep.oa == 100.0 * n_bg / (n_ec + n_bg)
        assert rep.f1 == 0.0
