import pickle

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.model_selection import cross_val_score
from sklearn.pipeline import make_pipeline
from sklearn.tree import DecisionTreeClassifier

from coalmap.estimators import (ACMIClassifier, BCIClassifier, SpectralIndexTransformer,
                                mask_from_predictions, scene_pixels)
from coalmap.indices import classify, compute_acmi, compute_bci
from coalmap.raster import NODATA, ReflectanceScene
from coalmap.synth import SceneLayout, generate_scene

from oracles import acmi_literal, bci_scalar


@pytest.fixture
def pixels(dark_pixels):
    return dark_pixels[:5000].astype(np.float64)


class TestACMIClassifier:
    def test_get_set_params(self):
        clf = ACMIClassifier(threshold=0.05)
        params = clf.get_params()
        assert params["threshold"] == 0.05 and params["c_blue"] == 4.75
        clf.set_params(bright_threshold=0.1)
        assert clone(clf).bright_threshold == 0.1

    def test_scores_match_oracle(self, pixels):
        clf = ACMIClassifier().fit(pixels)
        scores = clf.decision_function(pixels)
        for s, p in zip(scores[:500], pixels[:500]):
            assert s == acmi_literal(*p)
        np.testing.assert_array_equal(clf.predict(pixels), (scores > 0).astype(int))

    def test_matches_scene_path(self, dark_pixels):
        scene = ReflectanceScene.from_reflectance(dark_pixels.T.reshape(6, 100, 500))
        X, valid = scene_pixels(scene)
        pred = ACMIClassifier().fit(X).predict(X)
        assert mask_from_predictions(pred, valid) == classify(compute_acmi(scene))

    def test_not_fitted(self, pixels):
        with pytest.raises(NotFittedError):
            ACMIClassifier().predict(pixels)

    @pytest.mark.parametrize("bad", [np.zeros((3, 5)), np.full((2, 6), np.nan)])
    def test_validation(self, bad):
        with pytest.raises(ValueError):
            ACMIClassifier().fit(bad)

    def test_pickle(self, pixels):
        clf = ACMIClassifier().fit(pixels)
        again = pickle.loads(pickle.dumps(clf))
        np.testing.assert_array_equal(again.predict(pixels), clf.predict(pixels))

    def test_score_against_labels(self):
        scene, truth = generate_scene(SceneLayout.quadrants(32, ["ec", "water", "dark_soil", "vegetation"]))
        X, valid = scene_pixels(scene)
        y = truth.values[valid]
        assert ACMIClassifier().fit(X, y).score(X, y) > 0.95


class TestBCIClassifier:
    def test_matches_oracle_and_scene(self, pixels):
        clf = BCIClassifier().fit(pixels)
        pred = clf.predict(pixels)
        assert pred.tolist() == [int(bci_scalar(p[3], p[4], p[5])) for p in pixels]

    def test_matches_scene_path(self, dark_pixels):
        scene = ReflectanceScene.from_reflectance(dark_pixels.T.reshape(6, 100, 500))
        X, valid = scene_pixels(scene)
        assert mask_from_predictions(BCIClassifier().fit(X).predict(X), valid) == compute_bci(scene)


class TestTransformer:
    def test_feature_columns(self, pixels):
        t = SpectralIndexTransformer(indices=("mndwi", "acmi", "bci")).fit(pixels)
        out = t.transform(pixels)
        assert out.shape == (len(pixels), 3)
        np.testing.assert_array_equal(out[:, 1], ACMIClassifier().fit(pixels).decision_function(pixels))
        assert list(t.get_feature_names_out()) == ["mndwi", "acmi", "bci"]

    def test_unknown_index(self, pixels):
        with pytest.raises(ValueError):
            SpectralIndexTransformer(indices=("ndvi",)).fit(pixels)

    def test_in_pipeline(self):
        scene, truth = generate_scene(SceneLayout.quadrants(32, ["ec", "water", "dark_soil", "vegetation"]))
        X, valid = scene_pixels(scene)
        y = truth.values[valid]
        pipe = make_pipeline(SpectralIndexTransformer(), DecisionTreeClassifier(max_depth=2, random_state=0))
        assert cross_val_score(pipe, X, y, cv=3).mean() > 0.9


def test_mask_from_predictions_marks_invalid():
    valid = np.array([[True, False], [True, True]])
    mask = mask_from_predictions([1, 0, 1], valid)
    assert mask.values.tolist() == [[1, NODATA], [0, 1]]
