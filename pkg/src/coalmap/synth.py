"""Synthetic reflectance scenes with known EC ground truth.

Preset class means are hand-placed so that each class's ACMI and BCI outcome
at the mean follows by direct substitution:

===========  =====================================  ==========================
class        decisive property                      ACMI at mean
===========  =====================================  ==========================
ec           nir < swir1 < swir2 < 0.15, dark       +0.09 (BCI: EC)
ec_nrw       swir1 > swir2 (BCI chain broken)       +0.12 (BCI: non-EC)
water        green > swir1, MNDWI ~ +0.33           -1 (water suppression)
vegetation   high NIR                               -1.0325
bright_soil  visible bands > 0.075                  -1 (bright suppression)
brown_soil   red 0.15                               -1 (bright suppression)
dark_soil    dark, moderate NIR                     -0.11875
bright_bus   visible bands > 0.075                  -1 (bright suppression)
dark_bus     dark, NIR 0.11                         -0.08875
red_bus      red 0.16                               -1 (bright suppression)
===========  =====================================  ==========================
"""
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, RasterIOError
from .raster import SEMANTIC_BANDS, BandMap, BinaryMask, ReflectanceScene

DEFAULT_STDDEV = 0.005


@dataclass(frozen=True)
class ClassSpectrum:
    class_name: str
    mean: tuple
    stddev: tuple = (DEFAULT_STDDEV,) * 6
    is_ec: bool = False

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        if mean.shape != (len(SEMANTIC_BANDS),):
            raise ConfigError(f"{self.class_name}: mean needs {len(SEMANTIC_BANDS)} values")
        try:
            std = np.broadcast_to(np.asarray(self.stddev, dtype=np.float64), mean.shape)
        except ValueError:
            raise ConfigError(f"{self.class_name}: stddev must be a scalar or 6 values") from None
        if (std < 0).any():
            raise ConfigError(f"{self.class_name}: stddev must be >= 0")
        if (mean - 3 * std < 0).any() or (mean + 3 * std > 1).any():
            raise ConfigError(f"{self.class_name}: mean +- 3*stddev leaves [0, 1]")
        object.__setattr__(self, "mean", tuple(float(v) for v in mean))
        object.__setattr__(self, "stddev", tuple(float(v) for v in std))


#                  blue    green   red    nir    swir1  swir2
PRESETS = {
    "ec": ClassSpectrum("ec", (0.05, 0.055, 0.06, 0.07, 0.09, 0.10), is_ec=True),
    "ec_nrw": ClassSpectrum("ec_nrw", (0.05, 0.055, 0.06, 0.06, 0.11, 0.08), is_ec=True),
    "water": ClassSpectrum("water", (0.06, 0.05, 0.04, 0.03, 0.025, 0.02)),
    "vegetation": ClassSpectrum("vegetation", (0.03, 0.06, 0.04, 0.30, 0.18, 0.09)),
    "bright_soil": ClassSpectrum("bright_soil", (0.15, 0.20, 0.25, 0.30, 0.35, 0.30)),
    "brown_soil": ClassSpectrum("brown_soil", (0.08, 0.11, 0.15, 0.20, 0.27, 0.24)),
    "dark_soil": ClassSpectrum("dark_soil", (0.045, 0.06, 0.07, 0.12, 0.15, 0.13)),
    "bright_bus": ClassSpectrum("bright_bus", (0.20, 0.21, 0.22, 0.24, 0.26, 0.24)),
    "dark_bus": ClassSpectrum("dark_bus", (0.045, 0.06, 0.065, 0.11, 0.13, 0.12)),
    "red_bus": ClassSpectrum("red_bus", (0.07, 0.09, 0.16, 0.20, 0.22, 0.18)),
}

NON_EC_PRESETS = tuple(k for k, v in PRESETS.items() if not v.is_ec)


@dataclass(frozen=True)
class Region:
    col0: int
    row0: int
    col1: int  # exclusive
    row1: int  # exclusive
    class_name: str


@dataclass
class SceneLayout:
    width: int
    height: int
    regions: list
    rng_seed: int = 0

    def __post_init__(self):
        self.regions = [r if isinstance(r, Region) else Region(*r) for r in self.regions]
        if self.width <= 0 or self.height <= 0:
            raise ConfigError("layout needs positive width and height")
        cover = np.zeros((self.height, self.width), dtype=np.int32)
        for r in self.regions:
            if not (0 <= r.col0 < r.col1 <= self.width and 0 <= r.row0 < r.row1 <= self.height):
                raise ConfigError(f"region {r} falls outside the {self.width}x{self.height} raster")
            cover[r.row0:r.row1, r.col0:r.col1] += 1
        if (cover > 1).any():
            raise ConfigError("layout regions overlap")
        if (cover == 0).any():
            raise ConfigError("layout regions do not cover the raster")

    @classmethod
    def quadrants(cls, size, classes, rng_seed=0):
        """Four equal quadrants, classes in TL, TR, BL, BR order."""
        h = size // 2
        boxes = [(0, 0, h, h), (h, 0, size, h), (0, h, h, size), (h, h, size, size)]
        return cls(size, size, [Region(*b, c) for b, c in zip(boxes, classes)], rng_seed)

    def ec_polygons(self, spectra=None):
        """Pixel-space rectangles of the EC regions, as polygon rings."""
        lookup = _spectra_lookup(spectra)
        return [[(r.col0, r.row0), (r.col1, r.row0), (r.col1, r.row1), (r.col0, r.row1)]
                for r in self.regions if lookup[r.class_name].is_ec]


def _spectra_lookup(spectra):
    lookup = dict(PRESETS)
    for s in spectra or ():
        lookup[s.class_name] = s
    return lookup


def generate_scene(layout, spectra=None):
    """Draw a scene and its ground-truth mask.

    Every pixel gets per-band Gaussian noise around its class mean, clamped
    to [0, 1]. Regions are filled in layout order from one PCG64 stream, so
    output depends only on (layout, spectra, seed).

    Returns
    -------
    (ReflectanceScene, BinaryMask)
    """
    lookup = _spectra_lookup(spectra)
    unknown = sorted({r.class_name for r in layout.regions} - set(lookup))
    if unknown:
        raise DataError(f"no spectrum for classes {unknown}")
    rng = np.random.Generator(np.random.PCG64(layout.rng_seed))
    stack = np.zeros((len(SEMANTIC_BANDS), layout.height, layout.width), dtype=np.float64)
    truth = np.zeros((layout.height, layout.width), dtype=bool)
    for r in layout.regions:
        spectrum = lookup[r.class_name]
        shape = (len(SEMANTIC_BANDS), r.row1 - r.row0, r.col1 - r.col0)
        noise = rng.standard_normal(shape)
        draw = np.asarray(spectrum.mean)[:, None, None] + np.asarray(spectrum.stddev)[:, None, None] * noise
        stack[:, r.row0:r.row1, r.col0:r.col1] = np.clip(draw, 0.0, 1.0)
        truth[r.row0:r.row1, r.col0:r.col1] = spectrum.is_ec
    scene = ReflectanceScene.from_reflectance(
        stack.astype(np.float32), BandMap.custom(range(1, len(SEMANTIC_BANDS) + 1)))
    return scene, BinaryMask.from_bool(truth)


def layout_from_dict(doc, seed=None):
    """Parse a layout document.

    ``{"width": W, "height": H, "seed": 7,
       "regions": [{"rect": [col0, row0, col1, row1], "class": "ec"}, ...],
       "spectra": [{"class": "my_ec", "mean": [...], "stddev": [...], "is_ec": true}]}``

    ``rect`` is half-open in pixel units. ``spectra`` entries override or add
    to the presets; ``stddev`` may be a scalar.
    """
    try:
        regions = [Region(*[int(v) for v in r["rect"]], r["class"]) for r in doc["regions"]]
        spectra = [ClassSpectrum(s["class"], tuple(s["mean"]),
                                 tuple(np.broadcast_to(s.get("stddev", DEFAULT_STDDEV), 6)),
                                 bool(s.get("is_ec", False)))
                   for s in doc.get("spectra", [])]
        layout = SceneLayout(int(doc["width"]), int(doc["height"]), regions,
                             int(seed if seed is not None else doc.get("seed", 0)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad layout document: {exc!r}") from exc
    return layout, spectra


def read_layout(path, seed=None):
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise RasterIOError(f"cannot read layout {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"layout {path} is not valid JSON: {exc}") from exc
    return layout_from_dict(doc, seed)
