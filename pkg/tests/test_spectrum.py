import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import complete_graph, path_graph, star_graph
from oracles import dense_laplacian, natural_spline
from specrep.graph import Graph, normalized_laplacian, permute
from specrep.spectrum import (Spectrum, full_spectrum, graph_spectrum, interpolate_spectrum,
                              partial_spectrum, sample_grid, write_spectra_csv)
from specrep.synthetic import (ErParams, derive_rng, generate_er, generate_sbm,
                               sbm_for_degree)


def spectrum_of(g):
    return full_spectrum(normalized_laplacian(g))


@pytest.mark.parametrize("g, expected", [
    (Graph(2, [(0, 1)]), [0, 2]),
    (path_graph(3), [0, 1, 2]),
    (complete_graph(4), [0, 4 / 3, 4 / 3, 4 / 3]),
    (star_graph(5), [0, 1, 1, 1, 2]),
    (Graph(3), [0, 0, 0]),
])
def test_analytic_spectra(g, expected):
    np.testing.assert_allclose(spectrum_of(g).values, expected, atol=1e-9)


def test_full_spectrum_sorted_and_trace(rng):
    for _ in range(20):
        n = int(rng.integers(2, 60))
        g = Graph(n, np.argwhere(np.triu(rng.random((n, n)) < 0.1, 1)))
        s = spectrum_of(g)
        assert len(s.values) == n and not s.is_partial
        assert np.all(np.diff(s.values) >= 0)
        assert s.values.sum() == pytest.approx(np.count_nonzero(np.bincount(g.edges.ravel(), minlength=n)), abs=1e-6)
        np.testing.assert_allclose(s.values, np.linalg.eigvalsh(dense_laplacian(n, g.edges.tolist())),
                                   atol=1e-10)


def test_connected_graph_has_zero_eigenvalue():
    g = generate_er(ErParams(80, 0.2), 3)
    assert abs(spectrum_of(g).values[0]) < 1e-8


def test_partial_k1_on_k2_and_fallback():
    L = normalized_laplacian(Graph(2, [(0, 1)]))
    s = partial_spectrum(L, 1)
    np.testing.assert_allclose(s.values, [0, 2], atol=1e-12)
    g = generate_er(ErParams(30, 0.3), 1)
    L = normalized_laplacian(g)
    assert np.array_equal(partial_spectrum(L, 15).values, full_spectrum(L).values)
    assert not partial_spectrum(L, 15).is_partial
    with pytest.raises(ValueError):
        partial_spectrum(L, 0)


@pytest.mark.parametrize("g, k", [
    (generate_er(ErParams(50, 0.2), derive_rng(0, 50)), 5),
    (generate_er(ErParams(300, 0.01), derive_rng(0, 1)), 20),          # many components
    (generate_sbm(sbm_for_degree(400, 4, 24.0, 8.0), 5), 32),          # dense: plain Lanczos
    (generate_er(ErParams(400, 0.012), 6), 40),                        # sparse: shift-invert
    (complete_graph(150), 10),                                          # degenerate top end
    (Graph(120, [(i, i + 1) for i in range(0, 119, 2)]), 8),           # 60 disjoint edges
])
def test_partial_matches_dense(g, k):
    L = normalized_laplacian(g)
    full = full_spectrum(L).values
    s = partial_spectrum(L, k)
    assert s.is_partial and len(s.values) == 2 * k
    np.testing.assert_allclose(s.values[:k], full[:k], atol=1e-6)
    np.testing.assert_allclose(s.values[k:], full[-k:], atol=1e-6)


def test_partial_deterministic():
    L = normalized_laplacian(generate_er(ErParams(300, 0.05), 2))
    assert np.array_equal(partial_spectrum(L, 16).values, partial_spectrum(L, 16).values)


def test_positions():
    s = Spectrum(np.zeros(4), 10, 2, 2)
    np.testing.assert_allclose(s.positions(), [0.1, 0.2, 0.9, 1.0])
    np.testing.assert_allclose(Spectrum(np.zeros(3), 3).positions(), [1 / 3, 2 / 3, 1])


# ---------------------------------------------------------------- interpolation

def test_sample_grid():
    np.testing.assert_allclose(sample_grid(4), [0.25, 0.5, 0.75, 1.0])


def test_k2_small_grid():
    # knots (1/2, 0), (1, 2); constant below the first knot
    lam = interpolate_spectrum(spectrum_of(Graph(2, [(0, 1)])), 4)
    np.testing.assert_allclose(lam, [0, 0, 1, 2], atol=1e-15)


def test_n_equals_m_reproduces_eigenvalues():
    g = generate_er(ErParams(64, 0.1), 4)
    s = spectrum_of(g)
    np.testing.assert_allclose(interpolate_spectrum(s, 64), np.clip(s.values, 0, 2), atol=1e-12)


@pytest.mark.parametrize("M", [1, 7, 256])
def test_edgeless_and_single_vertex_are_zero(M):
    assert np.array_equal(interpolate_spectrum(spectrum_of(Graph(5)), M), np.zeros(M))
    assert np.array_equal(interpolate_spectrum(spectrum_of(Graph(1)), M), np.zeros(M))


def test_matches_independent_spline_oracle(rng):
    for _ in range(10):
        n = int(rng.integers(5, 80))
        s = spectrum_of(Graph(n, np.argwhere(np.triu(rng.random((n, n)) < 0.2, 1))))
        grid = sample_grid(256)
        x = np.arange(1, n + 1) / n
        ref = np.full(256, s.values[0])
        inside = grid >= x[0]
        ref[inside] = natural_spline(x, s.values, grid[inside])
        ref = np.clip(np.maximum.accumulate(ref), 0, 2)
        np.testing.assert_allclose(interpolate_spectrum(s, 256), ref, atol=1e-10)


def test_output_monotone_and_bounded(rng):
    for _ in range(30):
        n = int(rng.integers(2, 120))
        s = spectrum_of(Graph(n, np.argwhere(np.triu(rng.random((n, n)) < rng.random(), 1))))
        lam = interpolate_spectrum(s, 256)
        assert lam.shape == (256,)
        assert np.all(np.diff(lam) >= -1e-6)
        assert lam.min() >= 0 and lam.max() <= 2


def test_clamps_out_of_range_values():
    lam = interpolate_spectrum(Spectrum(np.array([-0.5, 1.0, 2.5]), 3), 6)
    assert lam.min() == 0 and lam.max() == 2


def test_size_insensitive_length():
    for n in (3, 40, 700):
        g = generate_er(ErParams(n, min(1.0, 6 / n)), n)
        assert graph_spectrum(g).n == n
        assert interpolate_spectrum(graph_spectrum(g), 100).shape == (100,)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.floats(0.05, 0.9), st.integers(0, 2 ** 32 - 1))
def test_interpolated_spectrum_permutation_invariant(n, p, seed):
    rng = np.random.default_rng(seed)
    g = Graph(n, np.argwhere(np.triu(rng.random((n, n)) < p, 1)))
    a = interpolate_spectrum(spectrum_of(g))
    b = interpolate_spectrum(spectrum_of(permute(g, rng.permutation(n))))
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_partial_interpolation_close_to_full():
    # frozen calibration fixture: 200-node ER, p = 0.1, seed 0
    g = generate_er(ErParams(200, 0.1), 0)
    L = normalized_laplacian(g)
    full = interpolate_spectrum(full_spectrum(L), 256)
    part = interpolate_spectrum(partial_spectrum(L, 16), 256)
    assert np.abs(full - part).max() <= 0.05


def test_write_spectra_csv(tmp_path):
    rows = np.array([[0.0, 1.5], [0.25, 2.0]])
    path = tmp_path / "s.csv"
    write_spectra_csv(path, rows, ids=["a", "b"])
    lines = path.read_text().splitlines()
    assert lines[0] == "graph_id,x0,x1"
    assert lines[2] == "b,0.25,2.0"


# ---------------------------------------------------------------- large graphs

def forum_thread_graph(n, rng):
    """Sparse hub-and-spoke graph in the style of discussion threads:
    preferential-attachment tree plus n/10 random chords."""
    ends = [0]
    edges = []
    for v in range(1, n):
        u = ends[rng.integers(len(ends))]
        edges.append((u, v))
        ends += [u, v]
    chords = rng.integers(0, n, size=(n // 10, 2))
    chords = chords[chords[:, 0] != chords[:, 1]]
    return Graph(n, np.vstack([edges, chords]))


def test_large_sparse_graph_throughput():
    # size mix with mean about 430 and a long tail up to 3800 vertices
    rng = np.random.default_rng(2024)
    sizes = np.clip(rng.lognormal(np.log(330), 0.75, size=40), 10, 3800).astype(int)
    sizes[-1] = 3800
    graphs = [forum_thread_graph(int(n), rng) for n in sizes]
    start = time.perf_counter()
    for g in graphs:
        interpolate_spectrum(graph_spectrum(g), 256)
    per_graph = (time.perf_counter() - start) / len(graphs)
    print(f"mean size {sizes.mean():.0f}, {per_graph:.3f} s per graph")
    assert per_graph < 1.0
