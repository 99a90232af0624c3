"""Scikit-learn style estimator facade.

``DepthwiseSTFT`` wraps the fixed filter bank as a stateless transformer;
``STFTSepNetClassifier`` wraps network construction, normalization, and
the training loop behind fit/predict. Constructor arguments are stored
verbatim so the estimators are clone-compatible.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from .data import LabeledDataset
from .errors import ParameterError, ShapeError
from .netgraph import NetSpec, StageSpec, build_network
from .stft import build_basis, stft_forward
from .train import TrainConfig, standardize, train
from .validation import check_labels, check_matching_lengths, check_tensor4


def _require_fitted(est, attr: str) -> None:
    if not hasattr(est, attr):
        raise NotFittedError(
            f"this {type(est).__name__} instance is not fitted yet; "
            "call fit before using this method"
        )


class DepthwiseSTFT(TransformerMixin, BaseEstimator):
    """Fixed channelwise filter bank as a transformer: C -> 8C channels.

    Parameters
    ----------
    n : odd int >= 3, neighborhood side.
    path : "separable" or "direct" evaluation.
    """

    def __init__(self, n: int = 3, path: str = "separable"):
        self.n = n
        self.path = path

    def fit(self, X, y=None):
        X = check_tensor4(X)
        if self.path not in ("separable", "direct"):
            raise ParameterError(f"unknown evaluation path {self.path!r}")
        self.basis_ = build_basis(self.n)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        _require_fitted(self, "basis_")
        X = check_tensor4(X)
        if X.shape[1] != self.n_features_in_:
            raise ShapeError(
                f"X has {X.shape[1]} channels, fitted for {self.n_features_in_}"
            )
        return stft_forward(X, self.basis_, path=self.path)


class STFTSepNetClassifier(ClassifierMixin, BaseEstimator):
    """Image classifier over the block network, trained with Adam.

    Stages are given as parallel tuples: ``blocks_per_stage[i]`` blocks of
    widths (b, f) with a trailing 2x2 pool where ``pool_after[i]`` is
    true. Inputs are raw images; per-channel statistics are computed from
    the fit data and reapplied at prediction time.
    """

    def __init__(self, blocks_per_stage=(2, 2), b: int = 4, f: int = 32,
                 pool_after=(True, False), branches=(3, 5), lr: float = 0.01,
                 epochs1: int = 10, epochs2: int = 0, batch1: int = 64,
                 batch2: int = 128, augment: bool = False, seed: int = 0):
        self.blocks_per_stage = blocks_per_stage
        self.b = b
        self.f = f
        self.pool_after = pool_after
        self.branches = branches
        self.lr = lr
        self.epochs1 = epochs1
        self.epochs2 = epochs2
        self.batch1 = batch1
        self.batch2 = batch2
        self.augment = augment
        self.seed = seed

    def _net_spec(self, input_shape, classes: int) -> NetSpec:
        if len(self.blocks_per_stage) != len(self.pool_after):
            raise ParameterError(
                "blocks_per_stage and pool_after must have the same length"
            )
        stages = tuple(
            StageSpec(blocks=int(k), b=int(self.b), f=int(self.f), pool=bool(p))
            for k, p in zip(self.blocks_per_stage, self.pool_after)
        )
        return NetSpec(stages=stages, classes=classes, input_shape=input_shape,
                       seed=int(self.seed), branches=tuple(self.branches))

    def fit(self, X, y):
        X = check_tensor4(X)
        y = check_labels(y)
        check_matching_lengths(X, y)
        self.classes_, encoded = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ParameterError("fit needs at least 2 distinct classes")
        spec = self._net_spec(X.shape[1:], len(self.classes_))
        self.net_ = build_network(spec, seed=int(self.seed))
        cfg = TrainConfig(lr=self.lr, epochs1=int(self.epochs1),
                          epochs2=int(self.epochs2), batch1=int(self.batch1),
                          batch2=int(self.batch2), seed=int(self.seed),
                          augment=bool(self.augment))
        train_ds = LabeledDataset(images=X, labels=encoded, split="train")
        empty = LabeledDataset(images=X[:0], labels=encoded[:0], split="test")
        self.history_, self.stats_ = train(self.net_, train_ds, empty, cfg)
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        _require_fitted(self, "net_")
        X = check_tensor4(X)
        if X.shape[1] != self.n_features_in_:
            raise ShapeError(
                f"X has {X.shape[1]} channels, fitted for {self.n_features_in_}"
            )
        xs = standardize(X, self.stats_)
        out = [self.net_.predict_proba(xs[i:i + 256])
               for i in range(0, len(xs), 256)]
        return np.concatenate(out)

    def predict(self, X):
        _require_fitted(self, "net_")
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]
