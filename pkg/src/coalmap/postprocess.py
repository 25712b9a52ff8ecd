"""Mask post-processing: 3x3 median (majority) filter and QA-band pre-masking."""
from dataclasses import dataclass, field

import numpy as np

from . import _tiling
from .errors import ConfigError, DataError
from .raster import EC, NODATA, BinaryMask


@dataclass(frozen=True)
class QaBitConfig:
    """QA_PIXEL bit positions that invalidate a pixel.

    Defaults follow the Landsat Collection-2 layout (bit 3 cloud, bit 4
    cloud shadow).
    """

    cloud_bit: int = 3
    shadow_bit: int = 4
    extra_bits: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "extra_bits", tuple(int(b) for b in self.extra_bits))
        bits = self.bits
        if any(not 0 <= b <= 15 for b in bits):
            raise ConfigError(f"QA bit indices must lie in [0, 15], got {list(bits)}")
        if len(set(bits)) != len(bits):
            raise ConfigError(f"QA bit indices must be distinct, got {list(bits)}")

    @property
    def bits(self):
        return (self.cloud_bit, self.shadow_bit, *self.extra_bits)

    @property
    def bitmask(self):
        word = 0
        for b in self.bits:
            word |= 1 << b
        return word

    @classmethod
    def from_list(cls, bits):
        """``[cloud, shadow, *extra]`` as given on the command line."""
        if isinstance(bits, str):
            try:
                bits = [int(tok) for tok in bits.split(",") if tok.strip()]
            except ValueError:
                raise ConfigError(f"cannot parse QA bit list {bits!r}") from None
        bits = list(bits)
        if len(bits) < 2:
            raise ConfigError("QA bit list needs at least the cloud and shadow bits")
        return cls(bits[0], bits[1], tuple(bits[2:]))


def qa_flags(qa_band, cfg=None):
    """Boolean grid of pixels whose QA word has any configured bit set."""
    cfg = cfg or QaBitConfig()
    qa = np.asarray(qa_band)
    if not np.issubdtype(qa.dtype, np.integer):
        raise DataError(f"QA band must be integer typed, got {qa.dtype}")
    return (qa.astype(np.int64) & cfg.bitmask) != 0


def apply_qa_mask(mask, qa_band, cfg=None):
    """Set pixels flagged in ``qa_band`` to NODATA; everything else is unchanged."""
    qa = np.asarray(qa_band)
    if qa.shape != mask.shape:
        raise DataError(f"QA band is {qa.shape}, mask is {mask.shape}")
    values = mask.values.copy()
    values[qa_flags(qa, cfg)] = NODATA
    return BinaryMask(values)


def _majority_kernel(ec, nodata):
    # ec/nodata slabs carry one halo row above and below; pad columns here
    padded = np.pad(ec, ((0, 0), (1, 1)))
    rows, cols = ec.shape
    count = np.zeros((rows, cols), dtype=np.uint8)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            r0 = max(dr, 0)
            r1 = rows + min(dr, 0)
            count[r0 - dr:r1 - dr] += padded[r0:r1, 1 + dc:1 + dc + cols]
    out = (count >= 5).astype(np.uint8)
    out[nodata] = NODATA
    return out


def median_filter_3x3(mask, *, tile_rows=None, n_jobs=1):
    """3x3 median filter of a binary mask.

    For 0/1 values the median of nine cells is 1 exactly when at least five
    are 1, so this is computed as a neighbour count. Cells outside the image
    and NODATA cells count as NON_EC; NODATA pixels stay NODATA.
    """
    ec = (mask.values == EC).astype(np.uint8)
    nodata = mask.values == NODATA
    out = _tiling.apply_by_rows(_majority_kernel, [ec, nodata], halo=1,
                                tile_rows=tile_rows, n_jobs=n_jobs)
    return BinaryMask(out)
