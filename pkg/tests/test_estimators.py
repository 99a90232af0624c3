import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from stftsep.errors import ParameterError, ShapeError
from stftsep.estimators import DepthwiseSTFT, STFTSepNetClassifier
from stftsep.stft import build_basis, stft_forward_direct
from stftsep.validation import check_labels, check_matching_lengths, check_tensor4

from conftest import striped_split


# ---------------------------------------------------------------- validation

def test_check_tensor4():
    out = check_tensor4(np.zeros((1, 2, 3, 4), np.uint8))
    assert out.dtype == np.float32
    assert check_tensor4(np.zeros((1, 2, 3, 4))).dtype == np.float64
    with pytest.raises(ShapeError):
        check_tensor4(np.zeros((2, 3, 4)))
    with pytest.raises(ParameterError):
        check_tensor4(np.full((1, 1, 2, 2), np.nan))
    with pytest.raises(ParameterError):
        check_tensor4(np.array([[[["a"]]]]))


def test_check_labels():
    np.testing.assert_array_equal(check_labels([0, 1, 2]), [0, 1, 2])
    out = check_labels(np.array([0.0, 1.0, 2.0]))
    assert out.dtype == np.int64
    with pytest.raises(ParameterError):
        check_labels(np.array([0.5, 1.0]))
    with pytest.raises(ShapeError):
        check_labels(np.zeros((2, 2)))
    with pytest.raises(ShapeError):
        check_matching_lengths(np.zeros((3, 1, 2, 2)), np.zeros(2))


# ---------------------------------------------------------------- transformer

def test_depthwise_stft_transform_matches_functional():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((2, 3, 8, 8))
    t = DepthwiseSTFT(n=5, path="direct").fit(X)
    np.testing.assert_array_equal(t.transform(X),
                                  stft_forward_direct(X, build_basis(5)))
    assert t.n_features_in_ == 3
    out = t.fit_transform(X)
    assert out.shape == (2, 24, 8, 8)


def test_depthwise_stft_errors():
    X = np.zeros((1, 3, 8, 8), np.float32)
    with pytest.raises(NotFittedError):
        DepthwiseSTFT().transform(X)
    with pytest.raises(ParameterError):
        DepthwiseSTFT(path="wat").fit(X)
    with pytest.raises(ParameterError):
        DepthwiseSTFT(n=4).fit(X)
    t = DepthwiseSTFT().fit(X)
    with pytest.raises(ShapeError):
        t.transform(np.zeros((1, 2, 8, 8), np.float32))


def test_depthwise_stft_sklearn_protocol():
    t = DepthwiseSTFT(n=5, path="direct")
    assert t.get_params() == {"n": 5, "path": "direct"}
    c = clone(t)
    assert c.get_params() == t.get_params()
    t.set_params(n=3)
    assert t.n == 3


# ---------------------------------------------------------------- classifier

def small_clf(**kw):
    defaults = dict(blocks_per_stage=(1, 1), pool_after=(True, False), b=2,
                    f=8, lr=0.01, epochs1=3, epochs2=0, batch1=16, seed=0)
    defaults.update(kw)
    return STFTSepNetClassifier(**defaults)


def test_classifier_fit_predict_api():
    X, y = striped_split(12, seed=31)
    y = y + 5   # arbitrary label values must round-trip through classes_
    clf = small_clf().fit(X, y)
    np.testing.assert_array_equal(clf.classes_, [5, 6])
    proba = clf.predict_proba(X)
    assert proba.shape == (24, 2)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-5)
    pred = clf.predict(X)
    assert set(np.unique(pred)).issubset({5, 6})
    assert len(clf.history_) == 3
    assert clf.n_features_in_ == 3


def test_classifier_is_deterministic():
    X, y = striped_split(8, seed=32)
    p1 = small_clf().fit(X, y).predict_proba(X)
    p2 = small_clf().fit(X, y).predict_proba(X)
    np.testing.assert_array_equal(p1, p2)


def test_classifier_sklearn_protocol():
    clf = small_clf()
    params = clf.get_params()
    assert params["b"] == 2 and params["blocks_per_stage"] == (1, 1)
    c = clone(clf)
    assert c.get_params() == params
    with pytest.raises(NotFittedError):
        clf.predict(np.zeros((1, 3, 32, 32), np.float32))


def test_classifier_input_validation():
    X, y = striped_split(8, seed=33)
    with pytest.raises(ShapeError):
        small_clf().fit(X, y[:-1])
    with pytest.raises(ParameterError):
        small_clf().fit(X, np.zeros(len(y), np.int64))    # single class
    with pytest.raises(ParameterError):
        small_clf(pool_after=(True,)).fit(X, y)           # length mismatch
    clf = small_clf().fit(X, y)
    with pytest.raises(ShapeError):
        clf.predict(np.zeros((1, 5, 32, 32), np.float32))
