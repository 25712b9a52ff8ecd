"""Raster ingestion, band semantics and GeoTIFF output.

Scenes hold surface reflectance as float32 grids. Integer Landsat Level-2
products are converted with ``reflectance = DN * scale + offset``; the default
is the Collection-2 L2SP convention. Values outside the plausible reflectance
range are flagged nodata rather than clipped.
"""
import enum
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import rasterio
from rasterio.errors import NotGeoreferencedWarning, RasterioIOError
from rasterio.transform import Affine

from .errors import ConfigError, DataError, RasterIOError

SEMANTIC_BANDS = ("blue", "green", "red", "nir", "swir1", "swir2")

VALID_RANGE = (-0.2, 1.6)

# BinaryMask encoding, also the on-disk uint8 encoding.
NON_EC = 0
EC = 1
NODATA = 255


class Sensor(str, enum.Enum):
    TM = "tm"
    ETM_PLUS = "etm"
    OLI = "oli"
    CUSTOM = "custom"


_PRESETS = {
    Sensor.TM: (1, 2, 3, 4, 5, 7),
    Sensor.ETM_PLUS: (1, 2, 3, 4, 5, 7),
    Sensor.OLI: (2, 3, 4, 5, 6, 7),
}


@dataclass(frozen=True)
class BandMap:
    """Semantic band name -> 1-based band index within the assembled stack."""

    sensor: Sensor
    assignments: dict

    def __post_init__(self):
        missing = [b for b in SEMANTIC_BANDS if b not in self.assignments]
        if missing:
            raise ConfigError(f"band map does not resolve {', '.join(missing)}")
        extra = set(self.assignments) - set(SEMANTIC_BANDS)
        if extra:
            raise ConfigError(f"unknown semantic bands in band map: {sorted(extra)}")
        idx = [self.assignments[b] for b in SEMANTIC_BANDS]
        if any(not isinstance(i, (int, np.integer)) or i < 1 for i in idx):
            raise ConfigError(f"band indices must be positive integers, got {idx}")
        if len(set(idx)) != len(idx):
            raise ConfigError(f"band map is not injective: {idx}")

    @classmethod
    def preset(cls, sensor):
        sensor = Sensor(sensor)
        if sensor is Sensor.CUSTOM:
            raise ConfigError("the custom sensor has no preset; use BandMap.custom")
        return cls(sensor, dict(zip(SEMANTIC_BANDS, _PRESETS[sensor])))

    @classmethod
    def custom(cls, mapping):
        if isinstance(mapping, str):
            try:
                mapping = [int(tok) for tok in mapping.split(",")]
            except ValueError:
                raise ConfigError(f"cannot parse band list {mapping!r}") from None
        if not isinstance(mapping, dict):
            mapping = list(mapping)
            if len(mapping) != len(SEMANTIC_BANDS):
                raise ConfigError(
                    f"band list needs {len(SEMANTIC_BANDS)} entries "
                    f"({','.join(SEMANTIC_BANDS)}), got {len(mapping)}")
            mapping = dict(zip(SEMANTIC_BANDS, mapping))
        return cls(Sensor.CUSTOM, {k.lower(): int(v) for k, v in mapping.items()})

    @property
    def max_index(self):
        return max(self.assignments.values())

    def to_dict(self):
        return {"sensor": self.sensor.value, "assignments": dict(self.assignments)}


@dataclass(frozen=True)
class ScaleOffset:
    scale: float = 2.75e-5
    offset: float = -0.2
    nodata_dn: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ConfigError(f"scale must be > 0, got {self.scale}")
        if not np.isfinite(self.offset):
            raise ConfigError(f"offset must be finite, got {self.offset}")

    def to_reflectance(self, dn):
        """Affine DN -> reflectance in float64 (no range checks)."""
        return np.asarray(dn, dtype=np.float64) * self.scale + self.offset

    def to_dn(self, reflectance, rounded=True):
        """Inverse transform. DNs are integers, so by default round to nearest."""
        dn = (np.asarray(reflectance, dtype=np.float64) - self.offset) / self.scale
        return np.rint(dn) if rounded else dn

    def to_dict(self):
        return {"scale": self.scale, "offset": self.offset, "nodata_dn": self.nodata_dn}


@dataclass(frozen=True)
class ReflectanceScene:
    """Immutable stack of reflectance grids plus a per-pixel nodata flag.

    ``bands[i]`` holds stack band ``i + 1``. Pixels that are nodata in any of
    the six mapped bands are nodata for the whole scene.
    """

    bands: tuple
    band_map: BandMap
    nodata_mask: np.ndarray
    geo_transform: tuple = None
    crs_id: str = None

    def __post_init__(self):
        if not self.bands:
            raise DataError("scene has no bands")
        shape = self.bands[0].shape
        if any(b.ndim != 2 or b.shape != shape for b in self.bands):
            raise DataError("all band grids must share one 2-D shape")
        if self.nodata_mask.shape != shape:
            raise DataError("nodata mask shape differs from band shape")
        if self.band_map.max_index > len(self.bands):
            raise DataError(
                f"band map references band {self.band_map.max_index} "
                f"but the stack has {len(self.bands)}")
        for arr in (*self.bands, self.nodata_mask):
            arr.flags.writeable = False

    @property
    def height(self):
        return self.bands[0].shape[0]

    @property
    def width(self):
        return self.bands[0].shape[1]

    @property
    def shape(self):
        return self.bands[0].shape

    def get_band(self, which):
        return get_band(self, which)

    def spectra(self):
        """(height, width, 6) float32 view of the semantic bands."""
        return np.stack([get_band(self, b) for b in SEMANTIC_BANDS], axis=-1)

    def with_nodata(self, extra):
        """Return a copy with additional pixels flagged nodata."""
        extra = np.asarray(extra, dtype=bool)
        if extra.shape != self.shape:
            raise DataError(f"extra nodata mask has shape {extra.shape}, scene is {self.shape}")
        return ReflectanceScene(self.bands, self.band_map, self.nodata_mask | extra,
                                self.geo_transform, self.crs_id)

    @classmethod
    def from_reflectance(cls, stack, band_map=None, nodata_mask=None,
                         geo_transform=None, crs_id=None):
        """Build a scene from reflectance already in physical units.

        ``stack`` is (n_bands, height, width). Non-finite or out-of-range
        values in mapped bands become nodata.
        """
        stack = np.asarray(stack)
        if stack.ndim != 3:
            raise DataError(f"expected a (bands, rows, cols) stack, got shape {stack.shape}")
        if band_map is None:
            band_map = BandMap.custom(range(1, len(SEMANTIC_BANDS) + 1))
        mask = np.zeros(stack.shape[1:], dtype=bool) if nodata_mask is None \
            else np.array(nodata_mask, dtype=bool)
        bands = []
        for i, band in enumerate(stack):
            band64 = band.astype(np.float64)
            bad = ~_plausible(band64)
            if i + 1 in band_map.assignments.values():
                mask |= bad
            bands.append(np.where(bad, np.nan, band64).astype(np.float32))
        return cls(tuple(bands), band_map, mask, geo_transform, crs_id)


@dataclass
class BinaryMask:
    """Per-pixel EC / NON_EC / NODATA classification stored as uint8."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.uint8)
        if self.values.ndim != 2:
            raise DataError("mask must be 2-D")
        bad = ~np.isin(self.values, (NON_EC, EC, NODATA))
        if bad.any():
            raise DataError(f"mask holds values outside {{0, 1, 255}}: {np.unique(self.values[bad])}")

    @property
    def shape(self):
        return self.values.shape

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def nodata(self):
        return self.values == NODATA

    @property
    def ec(self):
        return self.values == EC

    @classmethod
    def from_bool(cls, is_ec, nodata=None):
        values = np.where(is_ec, EC, NON_EC).astype(np.uint8)
        if nodata is not None:
            values[np.asarray(nodata, dtype=bool)] = NODATA
        return cls(values)

    def __eq__(self, other):
        return isinstance(other, BinaryMask) and np.array_equal(self.values, other.values)


def _plausible(values):
    lo, hi = VALID_RANGE
    return np.isfinite(values) & (values >= lo) & (values <= hi)


def get_band(scene, which):
    """Return the grid for semantic band ``which`` resolved via the band map."""
    key = str(which).lower()
    try:
        index = scene.band_map.assignments[key]
    except KeyError:
        raise ConfigError(f"semantic band {which!r} is not in the band map") from None
    return scene.bands[index - 1]


def _open(path):
    path = Path(path)
    if not path.exists():
        raise RasterIOError(f"no such raster: {path}")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NotGeoreferencedWarning)
            return rasterio.open(path)
    except RasterioIOError as exc:
        raise RasterIOError(f"cannot read {path}: {exc}") from exc


def _geo(src):
    transform = None if src.transform == Affine.identity() else tuple(src.transform.to_gdal())
    crs = src.crs.to_string() if src.crs else None
    return transform, crs


def read_stack(paths):
    """Read one multiband file or several files into a (bands, rows, cols) array.

    Returns ``(stack, geo_transform, crs_id)`` where geo comes from the first file.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    if not paths:
        raise ConfigError("no input rasters given")
    layers, geo, shape = [], None, None
    for path in paths:
        with _open(path) as src:
            data = src.read()
            if geo is None:
                geo = _geo(src)
        if shape is None:
            shape = data.shape[1:]
        elif data.shape[1:] != shape:
            raise DataError(f"{path} is {data.shape[1:]}, expected {shape}")
        layers.append(data)
    return np.concatenate(layers, axis=0), geo[0], geo[1]


def load_scene(paths, band_map=None, scale_offset=None):
    """Load and scale a scene from GeoTIFF(s).

    Parameters
    ----------
    paths : path or list of paths
        One multiband raster, or one raster per band (stacked in order).
    band_map : BandMap, optional
        Defaults to a 6-band blue..swir2 stack when the input has exactly six
        bands.
    scale_offset : ScaleOffset, optional
        Defaults to the Collection-2 L2SP scaling.

    Returns
    -------
    ReflectanceScene
    """
    scale_offset = scale_offset or ScaleOffset()
    stack, transform, crs = read_stack(paths)
    if band_map is None:
        if stack.shape[0] != len(SEMANTIC_BANDS):
            raise ConfigError(
                f"input has {stack.shape[0]} bands; pass a sensor preset or an explicit band list")
        band_map = BandMap.custom(range(1, len(SEMANTIC_BANDS) + 1))
    if band_map.max_index > stack.shape[0]:
        raise DataError(
            f"band map needs band {band_map.max_index}, input has {stack.shape[0]}")

    sentinel = np.zeros(stack.shape[1:], dtype=bool)
    for index in band_map.assignments.values():
        sentinel |= stack[index - 1] == scale_offset.nodata_dn
    reflectance = scale_offset.to_reflectance(stack)
    reflectance[stack == scale_offset.nodata_dn] = np.nan
    return ReflectanceScene.from_reflectance(reflectance, band_map, sentinel, transform, crs)


def _profile(shape, dtype, count, geo_transform, crs_id, nodata):
    profile = dict(driver="GTiff", height=shape[0], width=shape[1], count=count,
                   dtype=dtype, nodata=nodata)
    if geo_transform is not None:
        profile["transform"] = Affine.from_gdal(*geo_transform)
    if crs_id:
        profile["crs"] = crs_id
    return profile


def write_raster(path, data, geo_transform=None, crs_id=None, nodata=None):
    """Write a 2-D grid or (bands, rows, cols) stack as GeoTIFF."""
    data = np.asarray(data)
    if data.ndim == 2:
        data = data[np.newaxis]
    profile = _profile(data.shape[1:], data.dtype.name, data.shape[0],
                       geo_transform, crs_id, nodata)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NotGeoreferencedWarning)
            with rasterio.open(path, "w", **profile) as dst:
                dst.write(data)
    except (RasterioIOError, OSError) as exc:
        raise RasterIOError(f"cannot write {path}: {exc}") from exc


def write_mask(mask, path, geo_transform=None, crs_id=None):
    """Write a BinaryMask as uint8 GeoTIFF: 0 non-EC, 1 EC, 255 nodata."""
    write_raster(path, mask.values.astype(np.uint8), geo_transform, crs_id, nodata=NODATA)


def read_mask(path):
    with _open(path) as src:
        return BinaryMask(src.read(1))


def read_geo(path):
    """``(geo_transform, crs_id)`` of a raster, either may be None."""
    with _open(path) as src:
        return _geo(src)


def write_index(index, path, geo_transform=None, crs_id=None):
    """Write an index raster as float32 with NaN marking nodata."""
    values = np.where(index.nodata_mask, np.nan, index.values).astype(np.float32)
    write_raster(path, values, geo_transform, crs_id, nodata=float("nan"))


def read_qa(path):
    """Read the first band of a QA raster as an integer grid."""
    with _open(path) as src:
        qa = src.read(1)
    if not np.issubdtype(qa.dtype, np.integer):
        raise DataError(f"QA raster {path} is {qa.dtype}, expected an integer type")
    return qa


def band_config_from_dict(cfg):
    """Parse ``{"sensor": ..., "bands": ..., "scale": ..., "offset": ..., "nodata_dn": ...}``.

    Returns ``(band_map or None, ScaleOffset)``.
    """
    band_map = None
    if cfg.get("bands") is not None:
        band_map = BandMap.custom(cfg["bands"])
    elif cfg.get("sensor") not in (None, "custom"):
        try:
            band_map = BandMap.preset(cfg["sensor"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    defaults = ScaleOffset()

    def pick(key, cast):
        value = cfg.get(key)
        return getattr(defaults, key) if value is None else cast(value)

    try:
        scale_offset = ScaleOffset(pick("scale", float), pick("offset", float),
                                   pick("nodata_dn", int))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad scaling config: {exc}") from exc
    return band_map, scale_offset


def load_band_config(path):
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise RasterIOError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return band_config_from_dict(cfg)
