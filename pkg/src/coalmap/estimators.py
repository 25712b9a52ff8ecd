"""scikit-learn compatible wrappers around the per-pixel indices.

Inputs are pixel matrices ``X`` of shape (n_pixels, 6) with columns
blue, green, red, nir, swir1, swir2 (surface reflectance). The rules are
fixed, so ``fit`` only validates input and records metadata; the estimators
still clone, pickle and compose inside ``sklearn.pipeline.Pipeline``.
"""
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .indices import AcmiParams, acmi_kernel, bci_kernel, mndwi_kernel
from .raster import SEMANTIC_BANDS, BinaryMask

N_BANDS = len(SEMANTIC_BANDS)


def check_spectra(X, estimator=None):
    """Validate a pixel matrix: 2-D, numeric, finite, six columns."""
    X = check_array(X, dtype=(np.float64, np.float32), estimator=estimator)
    if X.shape[1] != N_BANDS:
        raise ValueError(
            f"expected {N_BANDS} columns ({', '.join(SEMANTIC_BANDS)}), got {X.shape[1]}")
    return X


def scene_pixels(scene):
    """Flatten the valid pixels of a scene into ``(X, valid)``."""
    valid = ~scene.nodata_mask
    return scene.spectra()[valid], valid


def mask_from_predictions(pred, valid):
    """Scatter per-pixel 0/1 predictions back into a BinaryMask."""
    is_ec = np.zeros(valid.shape, dtype=bool)
    is_ec[valid] = np.asarray(pred).astype(bool)
    return BinaryMask.from_bool(is_ec, ~valid)


class _RuleMixin:
    def fit(self, X, y=None):
        check_spectra(X, self)
        self.n_features_in_ = N_BANDS
        self.classes_ = np.array([0, 1])
        return self

    def _columns(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_spectra(X, self)
        return [X[:, i] for i in range(N_BANDS)]


class ACMIClassifier(_RuleMixin, ClassifierMixin, BaseEstimator):
    """Exposed-coal classifier thresholding the ACMI score.

    Parameters
    ----------
    c_blue, c_green, c_nir, c_swir1, c_swir2, c_const : float
        Coefficients of the linear form.
    bright_threshold : float
        Pixels whose brightest visible band exceeds this are suppressed.
    mndwi_threshold : float
        Pixels whose MNDWI exceeds this are suppressed as water.
    suppressed_value : float
        Score assigned to suppressed pixels.
    threshold : float
        EC decision threshold (EC where score > threshold).

    Pixels with green + swir1 == 0 have no defined MNDWI; their score is NaN
    and they are predicted non-EC.
    """

    def __init__(self, c_blue=4.75, c_green=-1.0, c_nir=-4.5, c_swir1=0.25, c_swir2=1.0,
                 c_const=0.1, bright_threshold=0.075, mndwi_threshold=0.0,
                 suppressed_value=-1.0, threshold=0.0):
        self.c_blue = c_blue
        self.c_green = c_green
        self.c_nir = c_nir
        self.c_swir1 = c_swir1
        self.c_swir2 = c_swir2
        self.c_const = c_const
        self.bright_threshold = bright_threshold
        self.mndwi_threshold = mndwi_threshold
        self.suppressed_value = suppressed_value
        self.threshold = threshold

    def fit(self, X, y=None):
        self.params_ = AcmiParams(
            self.c_blue, self.c_green, self.c_nir, self.c_swir1, self.c_swir2, self.c_const,
            self.bright_threshold, self.mndwi_threshold, self.suppressed_value, self.threshold)
        return super().fit(X, y)

    def decision_function(self, X):
        cols = self._columns(X)
        scores, _ = acmi_kernel(*cols, np.zeros(len(cols[0]), dtype=bool), self.params_)
        return scores

    def predict(self, X):
        return (self.decision_function(X) > self.threshold).astype(np.int64)


class BCIClassifier(_RuleMixin, ClassifierMixin, BaseEstimator):
    """Bare Coal Index: EC iff nir < swir1 < swir2 < 0.15."""

    def predict(self, X):
        cols = self._columns(X)
        return bci_kernel(cols[3], cols[4], cols[5]).astype(np.int64)


class SpectralIndexTransformer(TransformerMixin, BaseEstimator):
    """Map pixel spectra to index columns, e.g. ``("mndwi", "acmi")``."""

    def __init__(self, indices=("mndwi", "acmi"), params=None):
        self.indices = indices
        self.params = params

    def fit(self, X, y=None):
        check_spectra(X, self)
        unknown = set(self.indices) - {"mndwi", "acmi", "bci"}
        if unknown:
            raise ValueError(f"unknown indices {sorted(unknown)}")
        self.n_features_in_ = N_BANDS
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_spectra(X, self)
        cols = [X[:, i] for i in range(N_BANDS)]
        nodata = np.zeros(X.shape[0], dtype=bool)
        out = []
        for name in self.indices:
            if name == "mndwi":
                out.append(mndwi_kernel(cols[1], cols[4], nodata)[0])
            elif name == "acmi":
                out.append(acmi_kernel(*cols, nodata, self.params or AcmiParams())[0])
            else:
                out.append(bci_kernel(cols[3], cols[4], cols[5]).astype(np.float64))
        return np.column_stack(out)

    def get_feature_names_out(self, input_features=None):
        return np.asarray(list(self.indices), dtype=object)
