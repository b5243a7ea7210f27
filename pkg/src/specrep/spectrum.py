"""Normalized-Laplacian eigenvalues and their fixed-length resampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.csgraph
import scipy.sparse.linalg
from scipy.interpolate import CubicSpline

from .graph import Graph, normalized_laplacian

DEFAULT_GRID_SIZE = 256
DEFAULT_EIGS_K = 128
DEFAULT_FULL_THRESHOLD = 512
BOUND_TOL = 1e-8
SHIFT_INVERT_DEGREE = 8.0


class SpectrumError(RuntimeError):
    """Eigensolver failure."""


@dataclass(frozen=True)
class Spectrum:
    """Sorted eigenvalues of a normalized Laplacian of order ``n``.

    A partial spectrum holds the ``k`` smallest followed by the ``k``
    largest eigenvalues (``k_bottom == k_top == k``).
    """
    values: np.ndarray
    n: int
    k_bottom: int | None = None
    k_top: int | None = None

    @property
    def is_partial(self) -> bool:
        return self.k_bottom is not None

    def positions(self) -> np.ndarray:
        """Axis position ``k / n`` of the ``k``-th smallest eigenvalue (1-based)."""
        if self.is_partial:
            idx = np.concatenate([np.arange(1, self.k_bottom + 1),
                                  np.arange(self.n - self.k_top + 1, self.n + 1)])
        else:
            idx = np.arange(1, len(self.values) + 1)
        return idx / self.n


def sample_grid(M: int) -> np.ndarray:
    """The ``M`` sample positions ``j / M``, ``j = 1..M``."""
    return np.arange(1, M + 1) / M


def full_spectrum(L) -> Spectrum:
    n = L.shape[0]
    dense = L.toarray() if sp.issparse(L) else np.asarray(L, dtype=float)
    try:
        values = scipy.linalg.eigvalsh(dense)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SpectrumError(f"dense eigensolver failed on a {n}x{n} matrix: {exc}") from exc
    return Spectrum(np.sort(values), n)


def _extreme_eigenvalues(L, k):
    """``k`` smallest and ``k`` largest eigenvalues of a connected block.

    Sparse blocks (mean degree at most ``SHIFT_INVERT_DEGREE``) use
    shift-invert Lanczos around -0.01 and 2.01: trees and other sparse
    graphs have tightly clustered extreme eigenvalues that plain Lanczos
    resolves slowly, and their LU factors stay sparse. Denser blocks use
    plain Lanczos on both ends at once.
    """
    n = L.shape[0]
    if 2 * k >= n or n <= 64:
        vals = full_spectrum(L).values
        return vals[:k], vals[n - k:]
    # fixed start vector keeps ARPACK deterministic
    v0 = np.random.default_rng(0).standard_normal(n)
    L = L.tocsc()
    try:
        if (L.nnz - n) / n <= SHIFT_INVERT_DEGREE:
            lo, hi = (np.sort(scipy.sparse.linalg.eigsh(
                L, k=k, sigma=shift, which="LM", v0=v0, tol=0,
                return_eigenvectors=False)) for shift in (-0.01, 2.01))
            return lo, hi
        vals = scipy.sparse.linalg.eigsh(
            L, k=2 * k, which="BE", v0=v0, tol=0,
            ncv=min(n, max(4 * k + 1, 20)), return_eigenvectors=False)
    except (scipy.sparse.linalg.ArpackError, RuntimeError) as exc:
        raise SpectrumError(f"Lanczos failed on a {n}x{n} matrix: {exc}") from exc
    vals = np.sort(vals)
    return vals[:k], vals[k:]


def partial_spectrum(L, k: int) -> Spectrum:
    """The ``k`` smallest and ``k`` largest eigenvalues of ``L``.

    Falls back to :func:`full_spectrum` when ``2k >= n``. Connected
    components are solved separately and merged; this keeps repeated zero
    eigenvalues (one per component) from stalling the Lanczos iteration.
    """
    n = L.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if 2 * k >= n:
        return full_spectrum(L)
    L = sp.csr_matrix(L)
    ncomp, comp = scipy.sparse.csgraph.connected_components(L, directed=False)
    bottoms, tops = [], []
    order = np.argsort(comp, kind="stable")
    bounds = np.searchsorted(comp[order], np.arange(ncomp + 1))
    for c in range(ncomp):
        idx = order[bounds[c]:bounds[c + 1]]
        if len(idx) == 1:
            v = np.array([L[idx[0], idx[0]]])
            bottoms.append(v)
            tops.append(v)
            continue
        b, t = _extreme_eigenvalues(L[idx][:, idx], min(k, len(idx)))
        bottoms.append(b)
        tops.append(t)
    bottom = np.sort(np.concatenate(bottoms))[:k]
    top = np.sort(np.concatenate(tops))[-k:]
    return Spectrum(np.concatenate([bottom, top]), n, k, k)


def graph_spectrum(g: Graph, eigs_k: int = DEFAULT_EIGS_K,
                   full_threshold: int = DEFAULT_FULL_THRESHOLD) -> Spectrum:
    """Full spectrum for graphs up to ``full_threshold`` vertices, partial
    with ``eigs_k`` values per end beyond that."""
    L = normalized_laplacian(g)
    if g.n <= full_threshold:
        return full_spectrum(L)
    return partial_spectrum(L, eigs_k)


def _spline_into(out, grid, x, y):
    """Overwrite ``out`` on ``[x[0], x[-1]]`` with the natural spline through ``(x, y)``."""
    inside = (grid >= x[0]) & (grid <= x[-1])
    if len(x) < 2:
        return
    if len(x) == 2:
        # natural spline through two knots is the straight line
        out[inside] = np.interp(grid[inside], x, y)
    else:
        out[inside] = CubicSpline(x, y, bc_type="natural")(grid[inside])


def interpolate_spectrum(s: Spectrum, M: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """Resample the spectrum at the ``M`` points ``j / M``.

    The ``k``-th eigenvalue is placed at ``k / n`` and a natural cubic
    spline is fitted through these knots; below ``1 / n`` the curve stays
    at the smallest eigenvalue. The result is made non-decreasing by a
    running maximum and clamped to ``[0, 2]``. For a partial spectrum each
    computed end gets its own spline and the unobserved middle is bridged
    linearly, since a single cubic across the gap overshoots badly.
    """
    if M < 1:
        raise ValueError(f"grid size must be >= 1, got {M}")
    values = np.asarray(s.values, dtype=float)
    grid = sample_grid(M)
    x = s.positions()
    # linear everywhere first: covers the partial gap and the constant left end
    curve = np.interp(grid, x, values)
    if s.is_partial:
        k = s.k_bottom
        for part in (slice(0, k), slice(k, None)):
            _spline_into(curve, grid, x[part], values[part])
    else:
        _spline_into(curve, grid, x, values)
    curve = np.maximum.accumulate(curve)
    return np.clip(curve, 0.0, 2.0)


def write_spectra_csv(path, rows, ids=None) -> None:
    """One row per graph: ``graph_id, v_1, ..., v_M``."""
    rows = np.asarray(rows)
    ids = range(len(rows)) if ids is None else ids
    with open(path, "w") as fh:
        fh.write("graph_id," + ",".join(f"x{j}" for j in range(rows.shape[1])) + "\n")
        for gid, row in zip(ids, rows):
            fh.write(f"{gid}," + ",".join(repr(float(v)) for v in row) + "\n")
