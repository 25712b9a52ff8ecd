"""Scene-level mapping: QA mask -> index -> threshold -> median filter."""
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .indices import AcmiParams, IndexRaster, classify, compute_acmi, compute_bci
from .postprocess import QaBitConfig, apply_qa_mask, median_filter_3x3, qa_flags
from .raster import EC, NODATA, BinaryMask


@dataclass
class MappingResult:
    mask: BinaryMask
    index: IndexRaster = None  # None for BCI, which has no continuous score


def map_coal(scene, method="acmi", params=None, threshold=None, qa_band=None,
             qa_cfg=None, median=True, tile_rows=None, n_jobs=1):
    """Produce an EC mask for ``scene`` with ``method`` in {"acmi", "bci"}.

    QA-flagged pixels are made nodata before the index is computed, so they
    never take part in the median vote.
    """
    params = params or AcmiParams()
    if threshold is None:
        threshold = params.classify_threshold
    if qa_band is not None:
        flags = qa_flags(qa_band, qa_cfg or QaBitConfig())
        if flags.shape != scene.shape:
            raise DataError(f"QA band is {flags.shape}, scene is {scene.shape}")
        scene = scene.with_nodata(flags)

    index = None
    if method == "acmi":
        index = compute_acmi(scene, params, tile_rows=tile_rows, n_jobs=n_jobs)
        mask = classify(index, threshold)
    elif method == "bci":
        mask = compute_bci(scene, tile_rows=tile_rows, n_jobs=n_jobs)
    else:
        raise ValueError(f"unknown method {method!r}")
    if qa_band is not None:
        mask = apply_qa_mask(mask, qa_band, qa_cfg)
    if median:
        mask = median_filter_3x3(mask, tile_rows=tile_rows, n_jobs=n_jobs)
    return MappingResult(mask, index)


# agreement raster codes
BOTH_NON_EC, FIRST_ONLY, SECOND_ONLY, BOTH_EC = 0, 1, 2, 3


def agreement(first, second):
    """Cross-tabulate two masks per pixel: 0 neither, 1 first only, 2 second only, 3 both."""
    a, b = first.values, second.values
    out = (a == EC).astype(np.uint8) + 2 * (b == EC).astype(np.uint8)
    out[(a == NODATA) | (b == NODATA)] = NODATA
    return out
