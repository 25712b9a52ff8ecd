"""Per-pixel spectral indices: MNDWI, ACMI, BCI, and ACMI thresholding.

All kernels are pure element-wise maps, so scenes may be split into row tiles
and evaluated in parallel (``tile_rows``/``n_jobs``) with bit-identical output.
"""
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import _tiling
from .errors import ConfigError, DataError
from .raster import BinaryMask, get_band


@dataclass(frozen=True)
class AcmiParams:
    """Coefficients and thresholds of the Automated Coal Mapping Index.

    The linear form is
    ``c_blue*blue + c_green*green + c_nir*nir + c_swir1*swir1 + c_swir2*swir2 + c_const``,
    replaced by ``suppressed_value`` wherever MNDWI exceeds ``mndwi_threshold``
    or the brightest visible band exceeds ``bright_threshold``.
    """

    c_blue: float = 4.75
    c_green: float = -1.0
    c_nir: float = -4.5
    c_swir1: float = 0.25
    c_swir2: float = 1.0
    c_const: float = 0.1
    bright_threshold: float = 0.075
    mndwi_threshold: float = 0.0
    suppressed_value: float = -1.0
    classify_threshold: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise ConfigError(f"AcmiParams.{f.name} must be finite")
        if self.bright_threshold <= 0:
            raise ConfigError("bright_threshold must be > 0")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown ACMI parameters: {sorted(unknown)}")
        try:
            return cls(**{k: float(v) for k, v in d.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad ACMI parameter: {exc}") from exc

    def to_dict(self):
        return asdict(self)


@dataclass
class IndexRaster:
    values: np.ndarray
    nodata_mask: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        self.nodata_mask = np.asarray(self.nodata_mask, dtype=bool)
        if self.values.shape != self.nodata_mask.shape:
            raise DataError("index values and nodata mask differ in shape")

    @property
    def shape(self):
        return self.values.shape

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]


# Array kernels. Inputs are float32 reflectance; arithmetic is float64 and
# evaluated left to right so a scalar transcription reproduces it exactly.

def mndwi_kernel(green, swir1, nodata):
    g = green.astype(np.float64)
    s1 = swir1.astype(np.float64)
    denom = g + s1
    bad = nodata | (denom == 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = (g - s1) / denom
    return np.where(bad, np.nan, values), bad


def acmi_kernel(blue, green, red, nir, swir1, swir2, nodata, params):
    b, g, r, n, s1, s2 = (a.astype(np.float64) for a in (blue, green, red, nir, swir1, swir2))
    mndwi, bad = mndwi_kernel(green, swir1, nodata)
    linear = (params.c_blue * b + params.c_green * g + params.c_nir * n
              + params.c_swir1 * s1 + params.c_swir2 * s2 + params.c_const)
    water = mndwi > params.mndwi_threshold
    bright = np.maximum(np.maximum(b, g), r) > params.bright_threshold
    values = np.where(water | bright, params.suppressed_value, linear)
    return np.where(bad, np.nan, values), bad


def bci_kernel(nir, swir1, swir2):
    return (nir < swir1) & (swir1 < swir2) & (swir2 < 0.15)


def compute_mndwi(scene, *, tile_rows=None, n_jobs=1):
    """Modified normalized difference water index, (green - swir1) / (green + swir1).

    Zero-denominator pixels are nodata.
    """
    def kernel(g, s1, nd):
        values, bad = mndwi_kernel(g, s1, nd)
        return np.stack([values, bad], axis=-1)

    out = _tiling.apply_by_rows(
        kernel, [get_band(scene, "green"), get_band(scene, "swir1"), scene.nodata_mask],
        tile_rows=tile_rows, n_jobs=n_jobs)
    return IndexRaster(out[..., 0], out[..., 1].astype(bool))


def compute_acmi(scene, params=None, *, tile_rows=None, n_jobs=1):
    """Automated Coal Mapping Index per pixel.

    Parameters
    ----------
    scene : ReflectanceScene
    params : AcmiParams, optional
    tile_rows, n_jobs : int, optional
        Row-tile size and thread count. Output does not depend on either.

    Returns
    -------
    IndexRaster
        float32 index values; nodata where the scene is nodata or MNDWI is
        undefined.
    """
    params = params or AcmiParams()
    names = ("blue", "green", "red", "nir", "swir1", "swir2")

    def kernel(*slabs):
        values, bad = acmi_kernel(*slabs, params)
        return np.stack([values, bad], axis=-1)

    out = _tiling.apply_by_rows(
        kernel, [get_band(scene, b) for b in names] + [scene.nodata_mask],
        tile_rows=tile_rows, n_jobs=n_jobs)
    return IndexRaster(out[..., 0], out[..., 1].astype(bool))


def classify(index, threshold=0.0):
    """Threshold an index raster: EC where ``value > threshold``."""
    return BinaryMask.from_bool(index.values > threshold, index.nodata_mask)


def compute_bci(scene, *, tile_rows=None, n_jobs=1):
    """Bare Coal Index: EC iff nir < swir1 < swir2 < 0.15 (strict chain)."""
    is_ec = _tiling.apply_by_rows(
        bci_kernel, [get_band(scene, b) for b in ("nir", "swir1", "swir2")],
        tile_rows=tile_rows, n_jobs=n_jobs)
    return BinaryMask.from_bool(is_ec, scene.nodata_mask)
