"""Graph classification protocol: repeated random splits scored by an
L2-regularized multinomial logistic regression."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .graph import Graph, GraphCollection
from .heat import heat_trace_signature
from .spectrum import DEFAULT_EIGS_K, DEFAULT_FULL_THRESHOLD, graph_spectrum, interpolate_spectrum
from .synthetic import derive_rng

REPRESENTATIONS = ("sgr", "lambda", "heat")


class SoftmaxRegression(ClassifierMixin, BaseEstimator):
    """L2-regularized logistic regression, fitted with L-BFGS.

    Minimizes ``sum_i CE(x_i, y_i) + ||W||^2 / (2C)``. Two classes use a
    single weight vector (class 0 is the reference with logit 0); more
    classes use a full multinomial softmax. With ``penalize_intercept`` the
    intercept is regularized like a weight on a constant feature of 1,
    which is how liblinear (scikit-learn's long-time default solver)
    treats it.
    """

    def __init__(self, C=1.0, tol=1e-6, max_iter=1000, penalize_intercept=True,
                 standardize=False):
        self.C = C
        self.tol = tol
        self.max_iter = max_iter
        self.penalize_intercept = penalize_intercept
        self.standardize = standardize

    def _unpack(self, theta, rows, d):
        return theta[:rows * d].reshape(rows, d), theta[rows * d:]

    def _logits(self, X, W, b):
        z = X @ W.T + b
        if len(self.classes_) == 2:
            z = np.column_stack([np.zeros(len(X)), z])
        return z

    def _objective(self, theta, X, Y):
        rows, d = self._n_rows(), X.shape[1]
        W, b = self._unpack(theta, rows, d)
        z = self._logits(X, W, b)
        z -= z.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        penalty = (W * W).sum()
        if self.penalize_intercept:
            penalty += (b * b).sum()
        loss = -(Y * logp).sum() + penalty / (2 * self.C)
        R = (np.exp(logp) - Y)[:, -rows:]
        gW = R.T @ X + W / self.C
        gb = R.sum(axis=0)
        if self.penalize_intercept:
            gb = gb + b / self.C
        return loss, np.concatenate([gW.ravel(), gb])

    def _n_rows(self):
        k = len(self.classes_)
        return 1 if k == 2 else k

    def fit(self, X, y):
        if self.C <= 0:
            raise ValueError("C must be positive")
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, yi = np.unique(y, return_inverse=True)
        if len(self.classes_) < 2:
            raise ValueError("logistic regression needs at least two classes in the training data")
        if self.standardize:
            self.mean_ = X.mean(axis=0)
            self.scale_ = X.std(axis=0)
            self.scale_[self.scale_ == 0] = 1.0
            X = (X - self.mean_) / self.scale_
        rows, d = self._n_rows(), X.shape[1]
        Y = np.eye(len(self.classes_))[yi]
        res = minimize(self._objective, np.zeros(rows * (d + 1)), args=(X, Y), jac=True,
                       method="L-BFGS-B",
                       options={"gtol": self.tol, "maxiter": self.max_iter, "ftol": 0.0})
        self.coef_, self.intercept_ = self._unpack(res.x, rows, d)
        self.loss_ = float(res.fun)
        self.n_iter_ = int(res.nit)
        self.n_features_in_ = d
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if self.standardize:
            X = (X - self.mean_) / self.scale_
        return self._logits(X, self.coef_, self.intercept_)

    def predict_proba(self, X):
        z = self.decision_function(X)
        z -= z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]


def logistic_train(features, labels, C=1.0, **kwargs) -> SoftmaxRegression:
    return SoftmaxRegression(C=C, **kwargs).fit(features, labels)


def baseline_lambda(g: Graph, M: int = 256, eigs_k: int = DEFAULT_EIGS_K,
                    full_threshold: int = DEFAULT_FULL_THRESHOLD) -> np.ndarray:
    return interpolate_spectrum(graph_spectrum(g, eigs_k, full_threshold), M)


@dataclass
class EvalConfig:
    representation: str = "sgr"
    train_fraction: float = 0.8
    repeats: int = 100
    C: float = 1.0
    seed: int = 0
    standardize: bool = False
    penalize_intercept: bool = True

    def __post_init__(self):
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"representation must be one of {REPRESENTATIONS}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train fraction must lie in (0, 1)")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.C <= 0:
            raise ValueError("C must be positive")


@dataclass
class EvalReport:
    dataset: str
    representation: str
    accuracies: list = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies))

    def summary(self) -> str:
        return (f"{self.dataset} / {self.representation}: "
                f"{100 * self.mean:.2f} ± {100 * self.std:.2f} "
                f"({len(self.accuracies)} repeats)")

    def to_json(self) -> str:
        d = asdict(self)
        d.update(mean=self.mean, std=self.std)
        return json.dumps(d, indent=2)

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("repeat,accuracy\n")
            fh.writelines(f"{r},{a!r}\n" for r, a in enumerate(self.accuracies))


def split_indices(n: int, train_fraction: float, seed: int, repeat: int):
    """Unstratified random split for one repeat; depends only on
    ``(n, train_fraction, seed, repeat)``."""
    order = derive_rng(seed, repeat).permutation(n)
    n_train = int(round(train_fraction * n))
    return order[:n_train], order[n_train:]


def representation_features(collection: GraphCollection, representation: str, model=None,
                            M: int = 256, eigs_k: int = DEFAULT_EIGS_K,
                            full_threshold: int = DEFAULT_FULL_THRESHOLD, times=None):
    """Feature matrix for one of ``sgr``, ``lambda`` or ``heat``.

    ``model`` is a fitted :class:`~specrep.estimators.SGR`, required for
    ``sgr``; its grid size overrides ``M``.
    """
    if representation == "sgr":
        if model is None:
            raise ValueError("the sgr representation needs a trained model")
        check_is_fitted(model, "params_")
        if M != model.params_.M:
            raise ValueError(f"model was trained on M={model.params_.M}, requested M={M}")
    spectra = [graph_spectrum(g, eigs_k, full_threshold) for g in collection.graphs]
    if representation == "heat":
        return np.vstack([heat_trace_signature(s, times, M) for s in spectra])
    lam = np.vstack([interpolate_spectrum(s, M) for s in spectra])
    if representation == "lambda":
        return lam
    if representation == "sgr":
        return model.transform(lam)
    raise ValueError(f"unknown representation {representation!r}")


def evaluate_features(features, labels, config: EvalConfig, dataset: str = "") -> EvalReport:
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels)
    report = EvalReport(dataset, config.representation)
    for r in range(config.repeats):
        train, test = split_indices(len(labels), config.train_fraction, config.seed, r)
        clf = SoftmaxRegression(C=config.C, standardize=config.standardize,
                                penalize_intercept=config.penalize_intercept)
        clf.fit(features[train], labels[train])
        report.accuracies.append(float(np.mean(clf.predict(features[test]) == labels[test])))
    return report


def evaluate(collection: GraphCollection, config: EvalConfig, model=None, **feature_kwargs) -> EvalReport:
    if len(np.unique(collection.labels)) < 2:
        raise ValueError("evaluation needs at least two classes")
    X = representation_features(collection, config.representation, model, **feature_kwargs)
    return evaluate_features(X, collection.labels, config, collection.name)
