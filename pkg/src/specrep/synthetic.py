"""Erdos-Renyi and stochastic block model generators, and the labelled
ER-vs-SBM corpus used for self-supervised training."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .graph import Graph, GraphCollection

ER_LABEL = 0
SBM_LABEL = 1


@dataclass(frozen=True)
class ErParams:
    n: int
    p: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class SbmParams:
    n: int
    blocks: int
    p_in: float
    p_out: float

    def __post_init__(self):
        if self.blocks < 2:
            raise ValueError(f"need at least 2 blocks, got {self.blocks}")
        if self.n < self.blocks:
            raise ValueError(f"n={self.n} is smaller than blocks={self.blocks}")
        if not 0.0 <= self.p_out < self.p_in <= 1.0:
            raise ValueError(
                f"need 0 <= p_out < p_in <= 1, got p_in={self.p_in}, p_out={self.p_out}")


@dataclass(frozen=True)
class CorpusConfig:
    """Composition of the synthetic training corpus.

    Each SBM graph draws its size, expected mean degree and block count
    uniformly from the listed choices; it is paired with an ER graph of the
    same size and the same expected mean degree.
    """
    count: int = 1000
    sizes: tuple = (64, 128, 256, 512)
    degrees: tuple = (8.0, 16.0, 32.0)
    blocks: tuple = (2, 3, 4, 5)
    assortativity: float = 8.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        object.__setattr__(self, "degrees", tuple(float(d) for d in self.degrees))
        object.__setattr__(self, "blocks", tuple(int(b) for b in self.blocks))
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")
        if not self.sizes or not self.degrees or not self.blocks:
            raise ValueError("sizes, degrees and blocks must be non-empty")
        if min(self.blocks) < 2:
            raise ValueError("block counts must be >= 2")
        if min(self.sizes) < max(self.blocks):
            raise ValueError("every size must be >= the largest block count")
        if any(d <= 0 for d in self.degrees):
            raise ValueError("degrees must be positive")
        if self.assortativity <= 1.0:
            raise ValueError("assortativity (p_in / p_out) must exceed 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown corpus config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "CorpusConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for ``(seed, *keys)``; serial and parallel
    generation of item ``k`` therefore agree."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _bernoulli_pairs(rng, n, prob):
    """Upper-triangle pairs kept independently, ``prob`` an (n, n) matrix or scalar."""
    iu, ju = np.triu_indices(n, k=1)
    p = prob if np.isscalar(prob) else prob[iu, ju]
    keep = rng.random(len(iu)) < p
    return np.column_stack([iu[keep], ju[keep]])


def generate_er(params: ErParams, seed=None) -> Graph:
    rng = _as_rng(seed)
    return Graph(params.n, _bernoulli_pairs(rng, params.n, params.p))


def block_assignment(n: int, blocks: int) -> np.ndarray:
    """Equal-size blocks; the ``n % blocks`` leftover vertices join the last."""
    size = n // blocks
    return np.minimum(np.arange(n) // size, blocks - 1)


def generate_sbm(params: SbmParams, seed=None) -> Graph:
    rng = _as_rng(seed)
    z = block_assignment(params.n, params.blocks)
    prob = np.where(z[:, None] == z[None, :], params.p_in, params.p_out)
    return Graph(params.n, _bernoulli_pairs(rng, params.n, prob))


def sbm_for_degree(n: int, blocks: int, degree: float, ratio: float) -> SbmParams:
    """SBM with ``p_in = ratio * p_out`` whose expected mean degree is ``degree``.

    ``p_in`` is capped at 1, in which case the expected degree falls short.
    """
    sizes = np.bincount(block_assignment(n, blocks)).astype(float)
    within = np.sum(sizes * (sizes - 1) / 2)
    across = (n * (n - 1) / 2) - within
    p_out = degree * n / 2 / (ratio * within + across)
    p_in = ratio * p_out
    if p_in > 1.0:
        p_in, p_out = 1.0, 1.0 / ratio
    return SbmParams(n, blocks, p_in, p_out)


def expected_mean_degree(params) -> float:
    if isinstance(params, ErParams):
        return (params.n - 1) * params.p
    sizes = np.bincount(block_assignment(params.n, params.blocks)).astype(float)
    within = np.sum(sizes * (sizes - 1) / 2)
    across = params.n * (params.n - 1) / 2 - within
    return 2 * (within * params.p_in + across * params.p_out) / params.n


def corpus_pair_params(config: CorpusConfig, index: int) -> tuple[ErParams, SbmParams]:
    rng = derive_rng(config.seed, index, 0)
    n = int(rng.choice(config.sizes))
    degree = float(rng.choice(config.degrees))
    blocks = int(rng.choice(config.blocks))
    sbm = sbm_for_degree(n, blocks, degree, config.assortativity)
    er = ErParams(n, min(1.0, expected_mean_degree(sbm) / (n - 1)))
    return er, sbm


def generate_pair(config: CorpusConfig, index: int) -> tuple[Graph, Graph]:
    er, sbm = corpus_pair_params(config, index)
    return (generate_er(er, derive_rng(config.seed, index, 1)),
            generate_sbm(sbm, derive_rng(config.seed, index, 2)))


def generate_training_corpus(config: CorpusConfig) -> GraphCollection:
    """``config.count`` density-matched ER/SBM pairs, interleaved ER first.

    Labels: 0 for ER, 1 for SBM.
    """
    graphs, labels = [], []
    for k in range(config.count):
        er, sbm = generate_pair(config, k)
        graphs += [er, sbm]
        labels += [ER_LABEL, SBM_LABEL]
    return GraphCollection(graphs, np.asarray(labels), name="SYNTH",
                           classes=np.array([ER_LABEL, SBM_LABEL]))
