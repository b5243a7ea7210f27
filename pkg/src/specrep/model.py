"""Single-layer SeLU perceptron over the resampled spectrum, co-trained with
a linear softmax head on the ER-vs-SBM task."""
from __future__ import annotations

import io
import json
import logging
import zipfile
from dataclasses import asdict, dataclass, field

import numpy as np

from .synthetic import CorpusConfig, derive_rng

logger = logging.getLogger(__name__)

SELU_SCALE = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772

MODEL_FORMAT = "specrep-sgr"
MODEL_VERSION = 1


class TrainingDivergedError(FloatingPointError):
    def __init__(self, epoch: int):
        super().__init__(f"training loss became non-finite at epoch {epoch}")
        self.epoch = epoch


class ModelFormatError(ValueError):
    """Unreadable model file or unsupported format version."""


def selu(x):
    x = np.asarray(x, dtype=float)
    # expm1 on the clipped argument avoids overflow warnings from the unused branch
    neg = SELU_ALPHA * np.expm1(np.minimum(x, 0.0))
    return SELU_SCALE * np.where(x > 0, x, neg)


def selu_grad(x):
    x = np.asarray(x, dtype=float)
    return SELU_SCALE * np.where(x > 0, 1.0, SELU_ALPHA * np.exp(np.minimum(x, 0.0)))


@dataclass
class SgrParams:
    W: np.ndarray  # (N, M)
    b: np.ndarray  # (N,)

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ValueError(f"W {self.W.shape} and b {self.b.shape} are inconsistent")

    @property
    def N(self) -> int:
        return self.W.shape[0]

    @property
    def M(self) -> int:
        return self.W.shape[1]


@dataclass
class ClassifierHead:
    V: np.ndarray  # (2, N)
    c: np.ndarray  # (2,)

    def __post_init__(self):
        self.V = np.asarray(self.V, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        if self.V.ndim != 2 or self.c.shape != (self.V.shape[0],):
            raise ValueError(f"V {self.V.shape} and c {self.c.shape} are inconsistent")


def _check_input(p: SgrParams, lam):
    lam = np.asarray(lam, dtype=float)
    if lam.shape[-1] != p.M:
        raise ValueError(f"model expects spectra resampled to M={p.M}, got {lam.shape[-1]}")
    return lam


def embed(p: SgrParams, lam) -> np.ndarray:
    """``selu(W @ lam + b)``; ``lam`` may be one vector or a batch of rows."""
    lam = _check_input(p, lam)
    return selu(lam @ p.W.T + p.b)


def softmax(z):
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def logits(p: SgrParams, h: ClassifierHead, lam) -> np.ndarray:
    sigma = embed(p, lam)
    if h.V.shape[1] != p.N:
        raise ValueError(f"head expects {h.V.shape[1]} features, representation has {p.N}")
    return sigma @ h.V.T + h.c


def forward_classifier(p: SgrParams, h: ClassifierHead, lam) -> np.ndarray:
    return softmax(logits(p, h, lam))


def _log_softmax(z):
    z = z - np.max(z, axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def loss_and_grads(p: SgrParams, h: ClassifierHead, X, y):
    """Mean cross-entropy over the batch and its gradient for W, b, V, c."""
    X = _check_input(p, X)
    y = np.asarray(y)
    B = len(X)
    a = X @ p.W.T + p.b
    s = selu(a)
    z = s @ h.V.T + h.c
    logp = _log_softmax(z)
    loss = -logp[np.arange(B), y].mean()

    dz = np.exp(logp)
    dz[np.arange(B), y] -= 1.0
    dz /= B
    dV = dz.T @ s
    dc = dz.sum(axis=0)
    da = (dz @ h.V) * selu_grad(a)
    dW = da.T @ X
    db = da.sum(axis=0)
    return loss, {"W": dW, "b": db, "V": dV, "c": dc}


def saliency(p: SgrParams, h: ClassifierHead, lam) -> np.ndarray:
    """``|d(z_1 - z_0) / d lam|`` per grid position, where ``z`` are the
    head's logits. Works on one vector or a batch of rows."""
    lam = _check_input(p, lam)
    a = lam @ p.W.T + p.b
    dlogit = h.V[1] - h.V[0]
    return np.abs((selu_grad(a) * dlogit) @ p.W)


def glorot_uniform(rng, fan_out, fan_in):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def init_model(M: int, N: int, seed) -> tuple[SgrParams, ClassifierHead]:
    rng = seed if isinstance(seed, np.random.Generator) else derive_rng(seed, 1)
    W = glorot_uniform(rng, N, M)
    V = glorot_uniform(rng, 2, N)
    return SgrParams(W, np.zeros(N)), ClassifierHead(V, np.zeros(2))


@dataclass
class TrainConfig:
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    n_components: int = 256
    grid_size: int = 256
    learning_rate: float = 1e-2
    momentum: float = 0.9
    epochs: int = 50
    batch_size: int = 32
    validation_fraction: float = 0.2
    seed: int = 0
    eigs_k: int = 128
    full_threshold: int = 512
    precondition: bool = True

    def __post_init__(self):
        if isinstance(self.corpus, dict):
            self.corpus = CorpusConfig.from_dict(self.corpus)
        if self.learning_rate < 0:
            raise ValueError("learning rate must be non-negative")
        if not 0.0 < self.validation_fraction < 0.5:
            raise ValueError("validation fraction must lie in (0, 0.5)")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch size >= 1")
        if self.n_components < 1 or self.grid_size < 2:
            raise ValueError("need n_components >= 1 and grid_size >= 2")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["corpus"] = self.corpus.to_dict()
        return d

    def fingerprint(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float


def _evaluate(p, h, X, y):
    if len(X) == 0:
        return float("nan"), float("nan")
    z = logits(p, h, X)
    loss = -_log_softmax(z)[np.arange(len(y)), y].mean()
    return float(loss), float(np.mean(z.argmax(axis=1) == y))


def split_train_validation(n: int, fraction: float, seed: int):
    order = derive_rng(seed, 0).permutation(n)
    n_val = int(round(fraction * n))
    return order[n_val:], order[:n_val]


def fit_sgr(X, y, config: TrainConfig):
    """Train perceptron and head on resampled spectra ``X`` with binary
    labels ``y`` by mini-batch SGD with momentum.

    With ``config.precondition`` the momentum steps for ``(W, b)`` are taken
    in per-feature standardized input coordinates (statistics from the
    training split) and mapped back, so the returned model still acts on
    raw spectra. The initial weights are drawn in those coordinates too.
    Raw spectra are strongly correlated around 1 and plain SGD stalls on
    them.

    Returns ``(params, head, log)`` where ``log`` is a list of
    :class:`EpochRecord`; epoch 0 records the initial state.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[1] != config.grid_size:
        raise ValueError(f"features have {X.shape[1]} columns, config says M={config.grid_size}")
    train_idx, val_idx = split_train_validation(len(X), config.validation_fraction, config.seed)
    Xt, yt, Xv, yv = X[train_idx], y[train_idx], X[val_idx], y[val_idx]

    if config.precondition:
        mu = Xt.mean(axis=0)
        sd = Xt.std(axis=0)
        sd[sd < 1e-12] = 1.0
    else:
        mu, sd = np.zeros(X.shape[1]), np.ones(X.shape[1])

    p, h = init_model(config.grid_size, config.n_components, config.seed)
    # the draw is made for standardized inputs; express it on raw inputs
    p.W /= sd
    p.b -= p.W @ mu
    vel = {"W": np.zeros_like(p.W), "b": np.zeros_like(p.b),
           "V": np.zeros_like(h.V), "c": np.zeros_like(h.c)}
    log = [EpochRecord(0, *_evaluate(p, h, Xt, yt), *_evaluate(p, h, Xv, yv))]
    lr, mom = config.learning_rate, config.momentum

    for epoch in range(1, config.epochs + 1):
        order = derive_rng(config.seed, 2, epoch).permutation(len(Xt))
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            _, g = loss_and_grads(p, h, Xt[batch], yt[batch])
            # gradient w.r.t. the weights acting on standardized inputs
            gW = (g["W"] - np.outer(g["b"], mu)) * sd
            for k, grad in (("W", gW), ("b", g["b"]), ("V", g["V"]), ("c", g["c"])):
                vel[k] *= mom
                vel[k] -= lr * grad
            step_W = vel["W"] / sd
            p.W += step_W
            p.b += vel["b"] - step_W @ mu
            h.V += vel["V"]
            h.c += vel["c"]
        rec = EpochRecord(epoch, *_evaluate(p, h, Xt, yt), *_evaluate(p, h, Xv, yv))
        if not np.isfinite(rec.train_loss) or not np.all(np.isfinite(p.W)):
            raise TrainingDivergedError(epoch)
        logger.info("epoch %d: train loss %.4f acc %.3f, val loss %.4f acc %.3f",
                    epoch, rec.train_loss, rec.train_accuracy, rec.val_loss, rec.val_accuracy)
        log.append(rec)
    return p, h, log


def train(config: TrainConfig, n_jobs=None):
    """Generate the synthetic corpus described by ``config`` and fit on it."""
    from .estimators import spectra_features
    from .synthetic import generate_training_corpus

    corpus = generate_training_corpus(config.corpus)
    X = spectra_features(corpus.graphs, config.grid_size, config.eigs_k,
                         config.full_threshold, n_jobs=n_jobs)
    return fit_sgr(X, corpus.labels, config)


def write_log_csv(path, log) -> None:
    with open(path, "w") as fh:
        fh.write("epoch,train_loss,train_accuracy,val_loss,val_accuracy\n")
        for r in log:
            fh.write(f"{r.epoch},{r.train_loss!r},{r.train_accuracy!r},{r.val_loss!r},{r.val_accuracy!r}\n")


def save_model(p: SgrParams, h: ClassifierHead, path, fingerprint: str = "") -> None:
    """Write an ``.npz`` archive. Entries carry a fixed timestamp so equal
    models give byte-identical files."""
    arrays = {"format": np.array(MODEL_FORMAT), "version": np.array(MODEL_VERSION),
              "W": p.W, "b": p.b, "V": h.V, "c": h.c, "fingerprint": np.array(fingerprint)}
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name, arr in arrays.items():
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.asarray(arr), allow_pickle=False)
            zf.writestr(zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0)),
                        buf.getvalue())


def load_model(path) -> tuple[SgrParams, ClassifierHead, str]:
    try:
        with np.load(path, allow_pickle=False) as z:
            data = {k: z[k] for k in z.files}
    except (ValueError, OSError, EOFError, AttributeError, zipfile.BadZipFile) as exc:
        raise ModelFormatError(f"{path}: not a {MODEL_FORMAT} model file") from exc
    if not isinstance(data, dict) or str(data.get("format", "")) != MODEL_FORMAT:
        raise ModelFormatError(f"{path}: not a {MODEL_FORMAT} model file")
    version = int(data["version"])
    if version != MODEL_VERSION:
        raise ModelFormatError(f"{path}: model format version {version}, expected {MODEL_VERSION}")
    try:
        p = SgrParams(data["W"], data["b"])
        h = ClassifierHead(data["V"], data["c"])
    except KeyError as exc:
        raise ModelFormatError(f"{path}: missing array {exc}") from exc
    return p, h, str(data.get("fingerprint", ""))
