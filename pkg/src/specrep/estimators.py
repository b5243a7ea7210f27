"""scikit-learn compatible transformers from graphs to feature vectors.

All transformers take ``X`` as a sequence of :class:`~specrep.graph.Graph`
and return a 2-d float array, so they drop into a ``Pipeline`` in front of
any classifier.
"""
from __future__ import annotations

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .graph import Graph
from .heat import check_time_grid, default_time_grid, heat_trace_signature
from .model import (ClassifierHead, SgrParams, TrainConfig, embed, fit_sgr,
                    forward_classifier, saliency)
from .spectrum import (DEFAULT_EIGS_K, DEFAULT_FULL_THRESHOLD, DEFAULT_GRID_SIZE,
                       graph_spectrum, interpolate_spectrum)
from .synthetic import CorpusConfig, generate_training_corpus


def check_graphs(X) -> list[Graph]:
    if isinstance(X, Graph):
        raise TypeError("expected a sequence of graphs, got a single Graph")
    graphs = list(X)
    if not graphs:
        raise ValueError("need at least one graph")
    for k, g in enumerate(graphs):
        if not isinstance(g, Graph):
            raise TypeError(f"item {k} is {type(g).__name__}, expected Graph")
    return graphs


def _resampled(g, M, eigs_k, full_threshold):
    return interpolate_spectrum(graph_spectrum(g, eigs_k, full_threshold), M)


def spectra_features(graphs, M=DEFAULT_GRID_SIZE, eigs_k=DEFAULT_EIGS_K,
                     full_threshold=DEFAULT_FULL_THRESHOLD, n_jobs=None) -> np.ndarray:
    """Stack the resampled spectrum of every graph into an ``(len, M)`` array."""
    graphs = check_graphs(graphs)
    if n_jobs in (None, 1):
        rows = [_resampled(g, M, eigs_k, full_threshold) for g in graphs]
    else:
        rows = Parallel(n_jobs=n_jobs)(
            delayed(_resampled)(g, M, eigs_k, full_threshold) for g in graphs)
    return np.vstack(rows)


class SpectrumResampler(TransformerMixin, BaseEstimator):
    """Raw resampled spectrum (the Λ baseline). Stateless."""

    def __init__(self, grid_size=DEFAULT_GRID_SIZE, eigs_k=DEFAULT_EIGS_K,
                 full_threshold=DEFAULT_FULL_THRESHOLD, n_jobs=None):
        self.grid_size = grid_size
        self.eigs_k = eigs_k
        self.full_threshold = full_threshold
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        self.n_features_out_ = self.grid_size
        return self

    def transform(self, X):
        return spectra_features(X, self.grid_size, self.eigs_k,
                                self.full_threshold, self.n_jobs)


class HeatTraceSignature(TransformerMixin, BaseEstimator):
    """Heat trace sampled on a time grid (64 log-spaced points in
    ``[1e-2, 1e2]`` by default)."""

    def __init__(self, times=None, grid_size=DEFAULT_GRID_SIZE, eigs_k=DEFAULT_EIGS_K,
                 full_threshold=DEFAULT_FULL_THRESHOLD):
        self.times = times
        self.grid_size = grid_size
        self.eigs_k = eigs_k
        self.full_threshold = full_threshold

    def fit(self, X=None, y=None):
        self.times_ = default_time_grid() if self.times is None else check_time_grid(self.times)
        self.n_features_out_ = len(self.times_)
        return self

    def transform(self, X):
        check_is_fitted(self, "times_")
        return np.vstack([
            heat_trace_signature(graph_spectrum(g, self.eigs_k, self.full_threshold),
                                 self.times_, self.grid_size)
            for g in check_graphs(X)])


class SGR(TransformerMixin, BaseEstimator):
    """Learned spectral representation ``selu(W lam + b)``.

    ``fit()`` without data generates the synthetic ER-vs-SBM corpus described
    by ``corpus`` and trains on it; ``fit(graphs, labels)`` trains on a
    given labelled corpus instead (label 0 = ER, 1 = SBM). ``transform``
    accepts graphs or an already resampled ``(n, grid_size)`` array.
    """

    def __init__(self, n_components=256, grid_size=DEFAULT_GRID_SIZE, corpus=None,
                 learning_rate=1e-2, momentum=0.9, epochs=50, batch_size=32,
                 validation_fraction=0.2, eigs_k=DEFAULT_EIGS_K,
                 full_threshold=DEFAULT_FULL_THRESHOLD, random_state=0, n_jobs=None):
        self.n_components = n_components
        self.grid_size = grid_size
        self.corpus = corpus
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.epochs = epochs
        self.batch_size = batch_size
        self.validation_fraction = validation_fraction
        self.eigs_k = eigs_k
        self.full_threshold = full_threshold
        self.random_state = random_state
        self.n_jobs = n_jobs

    def train_config(self) -> TrainConfig:
        corpus = self.corpus if self.corpus is not None else CorpusConfig(seed=self.random_state)
        return TrainConfig(
            corpus=corpus, n_components=self.n_components, grid_size=self.grid_size,
            learning_rate=self.learning_rate, momentum=self.momentum, epochs=self.epochs,
            batch_size=self.batch_size, validation_fraction=self.validation_fraction,
            seed=self.random_state, eigs_k=self.eigs_k, full_threshold=self.full_threshold)

    def _features(self, X):
        if isinstance(X, np.ndarray) and X.ndim == 2 and X.dtype.kind == "f":
            if X.shape[1] != self.grid_size:
                raise ValueError(f"expected {self.grid_size} columns, got {X.shape[1]}")
            return X
        return spectra_features(X, self.grid_size, self.eigs_k, self.full_threshold, self.n_jobs)

    def fit(self, X=None, y=None):
        config = self.train_config()
        if X is None:
            corpus = generate_training_corpus(config.corpus)
            X, y = corpus.graphs, corpus.labels
        elif y is None:
            raise ValueError("labels are required when training graphs are given")
        y = np.asarray(y)
        if not set(np.unique(y)) <= {0, 1}:
            raise ValueError("training labels must be 0 (ER) or 1 (SBM)")
        self.params_, self.head_, self.history_ = fit_sgr(self._features(X), y, config)
        self.n_features_out_ = self.n_components
        return self

    @classmethod
    def from_params(cls, params: SgrParams, head: ClassifierHead, **kwargs) -> "SGR":
        est = cls(n_components=params.N, grid_size=params.M, **kwargs)
        est.params_, est.head_, est.history_ = params, head, []
        est.n_features_out_ = params.N
        return est

    def transform(self, X):
        check_is_fitted(self, "params_")
        return embed(self.params_, self._features(X))

    def predict_proba(self, X):
        """Probabilities of the discarded ER/SBM head (columns: ER, SBM)."""
        check_is_fitted(self, "params_")
        return forward_classifier(self.params_, self.head_, self._features(X))

    def saliency(self, X):
        check_is_fitted(self, "params_")
        return saliency(self.params_, self.head_, self._features(X))
