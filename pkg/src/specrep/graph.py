"""Graph data model, normalized Laplacian and TU benchmark I/O."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp


class DatasetError(ValueError):
    """Malformed or missing benchmark files."""


class Graph:
    """Undirected, unweighted simple graph on vertices ``0..n-1``.

    Edges are stored canonically as an ``(m, 2)`` integer array with
    ``i < j`` rows in lexicographic order, so two graphs with the same edge
    set compare equal regardless of how they were built.
    """

    __slots__ = ("n", "edges")

    def __init__(self, n, edges=()):
        n = int(n)
        if n < 1:
            raise ValueError(f"graph needs at least one vertex, got n={n}")
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size:
            if e.min() < 0 or e.max() >= n:
                raise ValueError(f"edge endpoint outside [0, {n})")
            if np.any(e[:, 0] == e[:, 1]):
                raise ValueError("self-loops are not allowed")
            e = np.sort(e, axis=1)
            e = np.unique(e, axis=0)
        e.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", e)

    def __setattr__(self, name, value):
        raise AttributeError("Graph is immutable")

    def __reduce__(self):
        return Graph, (self.n, self.edges)

    @property
    def m(self) -> int:
        return len(self.edges)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash((self.n, self.edges.tobytes()))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"

    def adjacency(self) -> sp.csr_matrix:
        i, j = self.edges[:, 0], self.edges[:, 1]
        data = np.ones(2 * self.m)
        rows = np.concatenate([i, j])
        cols = np.concatenate([j, i])
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))


@dataclass
class GraphCollection:
    graphs: list[Graph]
    labels: np.ndarray
    name: str = ""
    classes: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.graphs) != len(self.labels):
            raise ValueError(
                f"{len(self.graphs)} graphs but {len(self.labels)} labels")

    def __len__(self):
        return len(self.graphs)


def degree_vector(g: Graph) -> np.ndarray:
    return np.bincount(g.edges.ravel(), minlength=g.n).astype(np.int64)


def normalized_laplacian(g: Graph) -> sp.csr_matrix:
    """``I - D^{-1/2} A D^{-1/2}`` as a sparse matrix.

    Isolated vertices get a zero row and column (their ``D^{-1/2}`` entry is
    taken to be 0), so each contributes an eigenvalue 0.
    """
    deg = degree_vector(g).astype(float)
    inv_sqrt = np.zeros(g.n)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    i, j = g.edges[:, 0], g.edges[:, 1]
    w = -inv_sqrt[i] * inv_sqrt[j]
    rows = np.concatenate([i, j, np.arange(g.n)])
    cols = np.concatenate([j, i, np.arange(g.n)])
    data = np.concatenate([w, w, nz.astype(float)])
    L = sp.csr_matrix((data, (rows, cols)), shape=(g.n, g.n))
    L.eliminate_zeros()
    return L


def permute(g: Graph, perm) -> Graph:
    """Relabel vertex ``v`` as ``perm[v]``."""
    perm = np.asarray(perm, dtype=np.int64)
    if perm.shape != (g.n,) or not np.array_equal(np.sort(perm), np.arange(g.n)):
        raise ValueError("perm must be a bijection on [0, n)")
    return Graph(g.n, perm[g.edges])


def _read_ints(path: Path, width: int) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != width:
                raise DatasetError(
                    f"{path}:{lineno}: expected {width} value(s), got {line!r}")
            try:
                rows.append([int(p) for p in parts])
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: not an integer row: {line!r}") from None
    return np.asarray(rows, dtype=np.int64).reshape(-1, width)


def load_tu_dataset(directory, name: str) -> GraphCollection:
    """Read ``<name>_A.txt``, ``<name>_graph_indicator.txt`` and
    ``<name>_graph_labels.txt`` from ``directory``.

    Node ids in the files are 1-based and global; the returned graphs use
    0-based local ids. Labels are remapped to ``0..n_classes-1`` in sorted
    order of the original values, which are kept in ``classes``.
    """
    directory = Path(directory)
    paths = {k: directory / f"{name}_{k}.txt" for k in ("A", "graph_indicator", "graph_labels")}
    for p in paths.values():
        if not p.is_file():
            raise DatasetError(f"missing file {p}")

    indicator = _read_ints(paths["graph_indicator"], 1)[:, 0]
    raw_labels = _read_ints(paths["graph_labels"], 1)[:, 0]
    n_graphs = len(raw_labels)
    bad = np.flatnonzero((indicator < 1) | (indicator > n_graphs))
    if bad.size:
        raise DatasetError(
            f"{paths['graph_indicator']}:{bad[0] + 1}: node references graph id "
            f"{indicator[bad[0]]}, but only {n_graphs} graphs are labelled")

    sizes = np.bincount(indicator - 1, minlength=n_graphs)
    # first global node id (0-based) of every graph, assuming nodes are grouped
    if np.any(np.diff(indicator) < 0):
        raise DatasetError(f"{paths['graph_indicator']}: graph ids must be non-decreasing")
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])

    edges = _read_ints(paths["A"], 2) - 1
    n_nodes = len(indicator)
    if edges.size:
        out = np.flatnonzero((edges < 0).any(axis=1) | (edges >= n_nodes).any(axis=1))
        if out.size:
            raise DatasetError(f"{paths['A']}:{out[0] + 1}: node id outside 1..{n_nodes}")
        gid = indicator[edges] - 1
        cross = np.flatnonzero(gid[:, 0] != gid[:, 1])
        if cross.size:
            raise DatasetError(f"{paths['A']}:{cross[0] + 1}: edge crosses graph boundary")
        gid = gid[:, 0]
        keep = edges[:, 0] != edges[:, 1]
        edges, gid = edges[keep], gid[keep]
        order = np.argsort(gid, kind="stable")
        edges, gid = edges[order], gid[order]
        bounds = np.searchsorted(gid, np.arange(n_graphs + 1))
    else:
        bounds = np.zeros(n_graphs + 1, dtype=np.int64)

    graphs = []
    for k in range(n_graphs):
        if sizes[k] == 0:
            raise DatasetError(f"{paths['graph_indicator']}: graph {k + 1} has no nodes")
        local = edges[bounds[k]:bounds[k + 1]] - offsets[k]
        graphs.append(Graph(sizes[k], local))

    classes, labels = np.unique(raw_labels, return_inverse=True)
    return GraphCollection(graphs, labels, name=name, classes=classes)


def write_tu_dataset(collection: GraphCollection, directory, name: str | None = None) -> None:
    """Write ``collection`` in TU format; each undirected edge is listed in
    both directions, matching the public benchmark files."""
    name = name or collection.name
    directory = Path(directory)
    os.makedirs(directory, exist_ok=True)
    classes = collection.classes
    raw = collection.labels if classes is None else np.asarray(classes)[collection.labels]
    offset = 0
    with open(directory / f"{name}_A.txt", "w") as fa, \
            open(directory / f"{name}_graph_indicator.txt", "w") as fi:
        for k, g in enumerate(collection.graphs, 1):
            for i, j in g.edges + offset + 1:
                fa.write(f"{i}, {j}\n{j}, {i}\n")
            fi.write(f"{k}\n" * g.n)
            offset += g.n
    with open(directory / f"{name}_graph_labels.txt", "w") as fl:
        fl.writelines(f"{int(v)}\n" for v in raw)
