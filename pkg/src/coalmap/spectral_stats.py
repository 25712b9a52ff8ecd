"""Class spectral summaries and Jeffries-Matusita separability."""
import contextlib
import csv
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, RasterIOError
from .raster import SEMANTIC_BANDS

log = logging.getLogger(__name__)

COND_LIMIT = 1e12
RIDGE = 1e-8


@dataclass
class ClassSampleSet:
    class_name: str
    spectra: np.ndarray  # (n, 6) blue, green, red, nir, swir1, swir2

    def __post_init__(self):
        self.spectra = np.atleast_2d(np.asarray(self.spectra, dtype=np.float64))
        if self.spectra.shape[1] != len(SEMANTIC_BANDS):
            raise DataError(f"{self.class_name}: spectra need {len(SEMANTIC_BANDS)} columns")


@dataclass
class ClassStats:
    class_name: str
    n: int
    p25: np.ndarray
    p50: np.ndarray
    p75: np.ndarray
    min: np.ndarray
    max: np.ndarray
    mean: np.ndarray
    covariance: np.ndarray


def class_stats(samples):
    """Per-band percentiles (linear interpolation), mean and unbiased covariance."""
    x = samples.spectra
    if x.shape[0] < 2:
        raise DataError(f"{samples.class_name}: need at least 2 spectra, got {x.shape[0]}")
    p25, p50, p75 = np.percentile(x, [25, 50, 75], axis=0, method="linear")
    return ClassStats(samples.class_name, x.shape[0], p25, p50, p75,
                      x.min(axis=0), x.max(axis=0), x.mean(axis=0),
                      np.atleast_2d(np.cov(x, rowvar=False, ddof=1)))


def _condition(cov, name):
    """Ridge-regularise an ill-conditioned covariance."""
    if np.linalg.cond(cov) > COND_LIMIT:
        log.warning("covariance of %s is ill-conditioned; adding %g*I", name, RIDGE)
        cov = cov + RIDGE * np.eye(cov.shape[0])
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0 or not np.isfinite(logdet):
        raise DataError(f"covariance of {name} is singular after regularisation")
    return cov, logdet


def bhattacharyya(a, b):
    """Bhattacharyya distance between two Gaussian class summaries."""
    cov_a, logdet_a = _condition(np.atleast_2d(a.covariance), a.class_name)
    cov_b, logdet_b = _condition(np.atleast_2d(b.covariance), b.class_name)
    pooled, logdet_p = _condition((cov_a + cov_b) / 2, f"{a.class_name}+{b.class_name}")
    d = np.atleast_1d(a.mean - b.mean)
    term_mean = d @ np.linalg.solve(pooled, d) / 8
    term_cov = 0.5 * (logdet_p - 0.5 * (logdet_a + logdet_b))
    return float(term_mean + term_cov)


def jm_separability(a, b):
    """Jeffries-Matusita distance ``2 * (1 - exp(-B))``, in [0, 2].

    Arguments are put in a canonical order first so the result is exactly
    symmetric.
    """
    if (a.class_name, a.mean.tobytes()) > (b.class_name, b.mean.tobytes()):
        a, b = b, a
    dist = bhattacharyya(a, b)
    return float(2.0 * -np.expm1(-max(dist, 0.0)))


def jm_matrix(stats):
    n = len(stats)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = jm_separability(stats[i], stats[j])
    return out


def read_samples_csv(path):
    """Read ``class,blue,green,red,nir,swir1,swir2`` rows grouped by class.

    A header row is optional. Classes keep first-seen order.
    """
    groups = {}
    try:
        with open(path, newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh), 1):
                if not row or row[0].startswith("#"):
                    continue
                if lineno == 1 and row[0].strip().lower() == "class":
                    continue
                if len(row) != 1 + len(SEMANTIC_BANDS):
                    raise ConfigError(f"{path}:{lineno}: expected 7 fields, got {len(row)}")
                try:
                    values = [float(v) for v in row[1:]]
                except ValueError:
                    raise ConfigError(f"{path}:{lineno}: non-numeric reflectance") from None
                groups.setdefault(row[0].strip(), []).append(values)
    except OSError as exc:
        raise RasterIOError(f"cannot read samples {path}: {exc}") from exc
    if not groups:
        raise DataError(f"{path}: no sample rows")
    return [ClassSampleSet(name, rows) for name, rows in groups.items()]


def _open_out(dest):
    if hasattr(dest, "write"):
        return contextlib.nullcontext(dest)
    return open(dest, "w", newline="")


def write_stats_csv(stats, dest):
    """Write per-class, per-band percentile rows to a path or text stream."""
    with _open_out(dest) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["class", "band", "n", "min", "p25", "p50", "p75", "max", "mean"])
        for s in stats:
            for i, band in enumerate(SEMANTIC_BANDS):
                w.writerow([s.class_name, band, s.n] + [
                    repr(float(v[i])) for v in (s.min, s.p25, s.p50, s.p75, s.max, s.mean)])


def write_jm_csv(stats, matrix, dest):
    names = [s.class_name for s in stats]
    with _open_out(dest) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["class"] + names)
        for name, row in zip(names, matrix):
            w.writerow([name] + [f"{v:.6f}" for v in row])
