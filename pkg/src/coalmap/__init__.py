"""Exposed-coal mapping from Landsat surface reflectance."""
__version__ = "0.1.0"

from .assessment import (AccuracyReport, ConfusionMatrix, PolygonSet, SamplePoint, evaluate,
                         evaluate_full, metrics, point_in_polygon, stratified_sample)
from .estimators import ACMIClassifier, BCIClassifier, SpectralIndexTransformer
from .indices import AcmiParams, IndexRaster, classify, compute_acmi, compute_bci, compute_mndwi
from .pipeline import map_coal
from .postprocess import QaBitConfig, apply_qa_mask, median_filter_3x3
from .raster import (EC, NODATA, NON_EC, BandMap, BinaryMask, ReflectanceScene, ScaleOffset,
                     get_band, load_scene, read_mask, write_mask)
from .spectral_stats import ClassSampleSet, ClassStats, class_stats, jm_separability
from .synth import PRESETS, ClassSpectrum, SceneLayout, generate_scene

__all__ = [
    "ACMIClassifier", "AccuracyReport", "AcmiParams", "BCIClassifier", "BandMap", "BinaryMask",
    "ClassSampleSet", "ClassSpectrum", "ClassStats", "ConfusionMatrix", "EC", "IndexRaster",
    "NODATA", "NON_EC", "PRESETS", "PolygonSet", "QaBitConfig", "ReflectanceScene", "SamplePoint",
    "ScaleOffset", "SceneLayout", "SpectralIndexTransformer", "apply_qa_mask", "class_stats",
    "classify", "compute_acmi", "compute_bci", "compute_mndwi", "evaluate", "evaluate_full",
    "generate_scene", "get_band", "jm_separability", "load_scene", "map_coal",
    "median_filter_3x3", "metrics", "point_in_polygon", "read_mask", "stratified_sample",
    "write_mask",
]
