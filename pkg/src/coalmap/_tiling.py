"""Row-partitioned execution of grid kernels.

Kernels receive a slab of full-width rows (plus ``halo`` context rows on each
side where available) and must return an array with the same number of rows
as the slab. Only the core rows are kept, so output never depends on the
partition as long as the kernel looks at most ``halo`` rows away.
"""
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def row_slices(height, tile_rows):
    if tile_rows is None or tile_rows <= 0 or tile_rows >= height:
        return [slice(0, height)]
    return [slice(s, min(s + tile_rows, height)) for s in range(0, height, tile_rows)]


def apply_by_rows(kernel, arrays, *, halo=0, tile_rows=None, n_jobs=1, pad_value=0):
    """Run ``kernel(*slabs)`` over row tiles of ``arrays`` and stitch the result.

    Slabs at the image edge are padded with ``pad_value`` so every call sees
    ``halo`` context rows; the kernel therefore never needs to know whether
    it is at a border.
    """
    arrays = [np.asarray(a) for a in arrays]
    height = arrays[0].shape[0]
    tiles = row_slices(height, tile_rows)

    def run(sl):
        slabs = []
        for a in arrays:
            lo, hi = sl.start - halo, sl.stop + halo
            core = a[max(lo, 0):min(hi, height)]
            if halo:
                before, after = max(0, -lo), max(0, hi - height)
                widths = [(before, after)] + [(0, 0)] * (a.ndim - 1)
                core = np.pad(core, widths, constant_values=pad_value)
            slabs.append(core)
        out = kernel(*slabs)
        return out[halo:out.shape[0] - halo] if halo else out

    if n_jobs is None or n_jobs == 1 or len(tiles) == 1:
        parts = [run(sl) for sl in tiles]
    else:
        workers = None if n_jobs < 0 else n_jobs
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, tiles))
    return np.concatenate(parts, axis=0)
