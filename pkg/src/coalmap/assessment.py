"""Accuracy assessment against reference EC polygons.

Stratified random sampling (EC points inside polygons, background points
outside), confusion-matrix construction and UA/PA/OA/F1 reporting.

Pixel ``(col, row)`` covers the square ``[col, col+1) x [row, row+1)`` in
pixel space; its centre is ``(col + 0.5, row + 0.5)``.
"""
import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from rasterio.transform import Affine

from .errors import ConfigError, DataError, RasterIOError
from .raster import EC, NODATA


class CoordinateSpace(str, enum.Enum):
    PIXEL = "pixel"
    GEO = "geo"


class Truth(str, enum.Enum):
    EC = "EC"
    BACKGROUND = "BACKGROUND"


def _normalize_ring(ring):
    pts = [(float(x), float(y)) for x, y in ring]
    if len(pts) > 1 and pts[0] == pts[-1]:
        pts = pts[:-1]
    if len(set(pts)) < 3:
        raise DataError(f"degenerate polygon ring with {len(set(pts))} distinct vertices")
    area2 = sum(x0 * y1 - x1 * y0 for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]))
    if area2 == 0:
        raise DataError("degenerate polygon ring with zero area")
    return pts


@dataclass
class PolygonSet:
    """Reference polygons as exterior rings (closing vertex optional)."""

    polygons: list
    coordinate_space: CoordinateSpace = CoordinateSpace.PIXEL

    def __post_init__(self):
        self.coordinate_space = CoordinateSpace(self.coordinate_space)
        self.polygons = [_normalize_ring(r) for r in self.polygons]

    def to_pixel(self, geo_transform):
        """Convert GEO rings to pixel space through a GDAL-order geotransform."""
        if self.coordinate_space is CoordinateSpace.PIXEL:
            return self
        if geo_transform is None:
            raise ConfigError("geographic polygons need a georeferenced raster")
        inv = ~Affine.from_gdal(*geo_transform)
        rings = [[(inv.a * x + inv.b * y + inv.c, inv.d * x + inv.e * y + inv.f) for x, y in ring]
                 for ring in self.polygons]
        return PolygonSet(rings, CoordinateSpace.PIXEL)

    def to_dict(self):
        return {"coordinate_space": self.coordinate_space.value,
                "polygons": [[list(p) for p in ring] for ring in self.polygons]}


def read_polygons(path):
    """Read reference polygons from GeoJSON or pixel-space JSON.

    GeoJSON (``FeatureCollection``/``Feature``/``Polygon``/``MultiPolygon``)
    yields GEO rings; only exterior rings are used. Pixel-space files look
    like ``{"coordinate_space": "pixel", "polygons": [[[x, y], ...], ...]}``.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise RasterIOError(f"cannot read polygons {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if "polygons" in doc:
        return PolygonSet(doc["polygons"], doc.get("coordinate_space", "pixel"))

    rings = []

    def visit(geom):
        kind = geom.get("type")
        if kind == "FeatureCollection":
            for feat in geom["features"]:
                visit(feat)
        elif kind == "Feature":
            visit(geom["geometry"])
        elif kind == "Polygon":
            rings.append(geom["coordinates"][0])
        elif kind == "MultiPolygon":
            rings.extend(poly[0] for poly in geom["coordinates"])
        else:
            raise ConfigError(f"unsupported GeoJSON geometry type {kind!r}")

    visit(doc)
    return PolygonSet(rings, CoordinateSpace.GEO)


def _on_segment(px, py, x0, y0, x1, y1):
    cross = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
    return cross == 0 and min(x0, x1) <= px <= max(x0, x1) and min(y0, y1) <= py <= max(y0, y1)


def point_in_polygon(p, ring):
    """Even-odd ray casting. Points on an edge or vertex are outside."""
    px, py = float(p[0]), float(p[1])
    pts = _normalize_ring(ring)
    inside = False
    for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]):
        if _on_segment(px, py, x0, y0, x1, y1):
            return False
        if (y0 > py) != (y1 > py):
            x_cross = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
            if px < x_cross:
                inside = not inside
    return inside


def _centres_inside(ring, xs, ys):
    inside = np.zeros(xs.shape, dtype=bool)
    for (x0, y0), (x1, y1) in zip(ring, ring[1:] + ring[:1]):
        straddle = (y0 > ys) != (y1 > ys)
        if y1 != y0:
            x_cross = x0 + (ys - y0) * (x1 - x0) / (y1 - y0)
            inside ^= straddle & (xs < x_cross)
    return inside


def _touched_pixels(ring, height, width):
    """Pixels whose closed square intersects any edge of ``ring``."""
    touched = np.zeros((height, width), dtype=bool)
    for (x0, y0), (x1, y1) in zip(ring, ring[1:] + ring[:1]):
        c0 = max(int(np.floor(min(x0, x1))) - 1, 0)
        c1 = min(int(np.floor(max(x0, x1))) + 1, width - 1)
        r0 = max(int(np.floor(min(y0, y1))) - 1, 0)
        r1 = min(int(np.floor(max(y0, y1))) + 1, height - 1)
        if c0 > c1 or r0 > r1:
            continue
        rows, cols = np.mgrid[r0:r1 + 1, c0:c1 + 1]
        # bounding-box overlap of segment and pixel square
        hit = ((cols <= max(x0, x1)) & (cols + 1 >= min(x0, x1))
               & (rows <= max(y0, y1)) & (rows + 1 >= min(y0, y1)))
        # square corners must not all lie strictly on one side of the line
        dx, dy = x1 - x0, y1 - y0
        sides = [dx * (cy - y0) - dy * (cx - x0)
                 for cx, cy in ((cols, rows), (cols + 1, rows), (cols, rows + 1), (cols + 1, rows + 1))]
        sides = np.stack(sides)
        hit &= ~((sides > 0).all(axis=0) | (sides < 0).all(axis=0))
        touched[r0:r1 + 1, c0:c1 + 1] |= hit
    return touched


def strata(shape, polygons):
    """Return ``(interior, exterior)`` boolean grids of eligible pixels.

    Pixels touched by any polygon edge belong to neither stratum.
    """
    height, width = shape
    polygons = polygons if isinstance(polygons, PolygonSet) else PolygonSet(polygons)
    if polygons.coordinate_space is not CoordinateSpace.PIXEL:
        raise ConfigError("convert polygons to pixel space before sampling")
    rows, cols = np.mgrid[0:height, 0:width]
    xs, ys = cols + 0.5, rows + 0.5
    inside = np.zeros(shape, dtype=bool)
    edge = np.zeros(shape, dtype=bool)
    for ring in polygons.polygons:
        inside |= _centres_inside(ring, xs, ys)
        edge |= _touched_pixels(ring, height, width)
    return inside & ~edge, ~inside & ~edge


@dataclass(frozen=True)
class SamplePoint:
    col: int
    row: int
    truth: Truth


def stratified_sample(shape, polygons, n_ec=300, n_bg=450, rng_seed=0):
    """Draw EC samples inside the polygons and background samples outside them.

    Sampling is without replacement using numpy's PCG64 generator, so a given
    seed gives the same points on every platform.

    Parameters
    ----------
    shape : (height, width)
    polygons : PolygonSet
        Pixel-space reference polygons.
    n_ec, n_bg : int
        Stratum sizes.
    rng_seed : int

    Returns
    -------
    list of SamplePoint
        EC points first, then background points, each in draw order.
    """
    if n_ec < 0 or n_bg < 0:
        raise ConfigError("sample counts must be non-negative")
    polygons = polygons if isinstance(polygons, PolygonSet) else PolygonSet(polygons)
    if not polygons.polygons and n_ec > 0:
        raise DataError("cannot draw EC samples from an empty polygon set")
    interior, exterior = strata(shape, polygons)
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    points = []
    for stratum, n, truth in ((interior, n_ec, Truth.EC), (exterior, n_bg, Truth.BACKGROUND)):
        flat = np.flatnonzero(stratum)
        if flat.size < n:
            raise DataError(f"{truth.value} stratum has {flat.size} eligible pixels, need {n}")
        chosen = rng.choice(flat, size=n, replace=False) if n else flat[:0]
        rows, cols = np.unravel_index(chosen, shape)
        points.extend(SamplePoint(int(c), int(r), truth) for r, c in zip(rows, cols))
    return points


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0
    n_nodata: int = 0  # samples dropped because the mask was NODATA there

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn, self.n_nodata) < 0:
            raise DataError("confusion counts must be non-negative")

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self):
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
                "n_nodata": self.n_nodata}


def evaluate(mask, samples):
    """Tally predictions at sample points into a confusion matrix."""
    values = mask.values if hasattr(mask, "values") else np.asarray(mask)
    height, width = values.shape
    counts = dict(tp=0, fp=0, fn=0, tn=0, n_nodata=0)
    for s in samples:
        if not (0 <= s.row < height and 0 <= s.col < width):
            raise DataError(f"sample ({s.col}, {s.row}) lies outside the {width}x{height} mask")
        pred = values[s.row, s.col]
        if pred == NODATA:
            counts["n_nodata"] += 1
        elif Truth(s.truth) is Truth.EC:
            counts["tp" if pred == EC else "fn"] += 1
        else:
            counts["fp" if pred == EC else "tn"] += 1
    return ConfusionMatrix(**counts)


def evaluate_full(mask, truth):
    """Confusion matrix over every pixel, against a ground-truth mask."""
    pred = mask.values if hasattr(mask, "values") else np.asarray(mask)
    ref = truth.values if hasattr(truth, "values") else np.asarray(truth)
    if pred.shape != ref.shape:
        raise DataError(f"mask {pred.shape} and truth {ref.shape} differ in shape")
    skip = (pred == NODATA) | (ref == NODATA)
    p, t = pred[~skip] == EC, ref[~skip] == EC
    return ConfusionMatrix(int(np.sum(p & t)), int(np.sum(p & ~t)),
                           int(np.sum(~p & t)), int(np.sum(~p & ~t)), int(skip.sum()))


@dataclass(frozen=True)
class AccuracyReport:
    """UA, PA and OA in percent; F1 as a fraction. ``ua`` is None when undefined."""

    ua: float
    pa: float
    oa: float
    f1: float
    matrix: ConfusionMatrix
    ua_defined: bool = True

    def to_dict(self):
        return {"ua": self.ua, "pa": self.pa, "f1": self.f1, "f1_percent": 100.0 * self.f1,
                "oa": self.oa, "ua_defined": self.ua_defined, **self.matrix.to_dict()}


def metrics(m):
    """User's, producer's and overall accuracy plus F1 from a confusion matrix.

    F1 is the harmonic mean of UA and PA, taken as 0 when PA is 0.
    """
    if m.total == 0:
        raise DataError("no evaluated samples")
    if m.tp + m.fn == 0:
        raise DataError("producer's accuracy is undefined without EC reference samples")
    pa = m.tp / (m.tp + m.fn)
    ua_defined = m.tp + m.fp > 0
    ua = m.tp / (m.tp + m.fp) if ua_defined else None
    f1 = 0.0 if pa == 0 else 2 * (ua * pa) / (ua + pa)
    return AccuracyReport(
        100.0 * m.tp / (m.tp + m.fp) if ua_defined else None,
        100.0 * m.tp / (m.tp + m.fn),
        100.0 * (m.tp + m.tn) / m.total,
        f1, m, ua_defined)
