import numpy as np
import pytest

from oracles import central_difference, forward_loops, selu_scalar
from specrep.estimators import spectra_features
from specrep.model import (SELU_ALPHA, SELU_SCALE, ClassifierHead, ModelFormatError, SgrParams,
                           TrainConfig, TrainingDivergedError, embed, fit_sgr,
                           forward_classifier, init_model, load_model, logits, loss_and_grads,
                           saliency, save_model, selu, selu_grad, softmax, train, write_log_csv)
from specrep.synthetic import CorpusConfig, generate_training_corpus

SMALL = CorpusConfig(count=40, sizes=(32, 64), degrees=(8.0, 16.0), seed=3)


def random_model(rng, M=12, N=7, scale=1.0):
    p = SgrParams(rng.normal(0, scale, (N, M)), rng.normal(0, 0.5, N))
    h = ClassifierHead(rng.normal(0, scale, (2, N)), rng.normal(0, 0.5, 2))
    return p, h


@pytest.fixture(scope="module")
def small_features():
    corpus = generate_training_corpus(SMALL)
    return spectra_features(corpus.graphs, 32), corpus.labels


def test_selu_values():
    assert selu(0.0) == 0.0
    assert selu(1.0) == 1.0507009873554805
    assert selu(-50.0) == pytest.approx(-SELU_SCALE * SELU_ALPHA)
    assert SELU_SCALE * SELU_ALPHA == pytest.approx(1.7581, abs=1e-4)
    x = np.linspace(-5, 5, 1001)
    assert np.all(np.diff(selu(x)) > 0)
    np.testing.assert_allclose(selu(x), [selu_scalar(v) for v in x], rtol=1e-14, atol=1e-15)
    off_kink = x + 5e-4
    np.testing.assert_allclose(selu_grad(off_kink),
                               central_difference(lambda v: selu(v).sum(), off_kink, 1e-6),
                               rtol=1e-6, atol=1e-6)
    assert np.isfinite(selu(np.array([-1e308, 1e3]))).all()


def test_embed_examples(rng):
    lam = rng.uniform(0, 2, 8)
    np.testing.assert_array_equal(embed(SgrParams(np.eye(8), np.zeros(8)), lam), SELU_SCALE * lam)
    assert np.all(embed(SgrParams(np.zeros((5, 8)), np.zeros(5)), lam) == 0)
    with pytest.raises(ValueError):
        embed(SgrParams(np.eye(8), np.zeros(8)), np.ones(7))


def test_forward_matches_loop_oracle(rng):
    for _ in range(5):
        p, h = random_model(rng)
        lam = rng.uniform(0, 2, p.M)
        sigma, prob = forward_loops(p.W, p.b, h.V, h.c, lam)
        np.testing.assert_allclose(embed(p, lam), sigma, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(forward_classifier(p, h, lam), prob, rtol=1e-12, atol=1e-12)
        batch = rng.uniform(0, 2, (4, p.M))
        np.testing.assert_allclose(embed(p, batch)[2], embed(p, batch[2]), rtol=1e-14, atol=1e-15)


def test_forward_uniform_and_stable(rng):
    p, _ = random_model(rng)
    lam = rng.uniform(0, 2, p.M)
    np.testing.assert_allclose(forward_classifier(p, ClassifierHead(np.zeros((2, p.N)), np.zeros(2)), lam),
                               [0.5, 0.5])
    out = forward_classifier(p, ClassifierHead(np.zeros((2, p.N)), np.array([1000.0, -1000.0])), lam)
    assert np.isfinite(out).all() and out[0] == pytest.approx(1.0) and out[1] < 1e-300
    z = rng.uniform(-1e4, 1e4, (50, 2))
    s = softmax(z)
    assert np.isfinite(s).all()
    np.testing.assert_allclose(s.sum(axis=1), 1.0, atol=1e-12)


def test_head_dimension_mismatch(rng):
    p, _ = random_model(rng)
    with pytest.raises(ValueError):
        logits(p, ClassifierHead(np.zeros((2, p.N + 1)), np.zeros(2)), np.zeros(p.M))


def test_loss_gradients_match_finite_differences(rng):
    p, h = random_model(rng, M=10, N=6, scale=0.7)
    X = rng.uniform(0, 2, (4, 10))
    y = np.array([0, 1, 1, 0])
    _, grads = loss_and_grads(p, h, X, y)

    def loss_with(name, value):
        q = SgrParams(value if name == "W" else p.W, value if name == "b" else p.b)
        k = ClassifierHead(value if name == "V" else h.V, value if name == "c" else h.c)
        return loss_and_grads(q, k, X, y)[0]

    for name, value in (("W", p.W), ("b", p.b), ("V", h.V), ("c", h.c)):
        fd = central_difference(lambda v, n=name: loss_with(n, v), value)
        np.testing.assert_allclose(grads[name], fd, rtol=1e-4, atol=1e-9, err_msg=name)


def test_loss_matches_direct_cross_entropy(rng):
    p, h = random_model(rng)
    X = rng.uniform(0, 2, (6, p.M))
    y = rng.integers(0, 2, 6)
    prob = forward_classifier(p, h, X)
    assert loss_and_grads(p, h, X, y)[0] == pytest.approx(-np.log(prob[np.arange(6), y]).mean())


def test_saliency_matches_finite_differences(rng):
    for _ in range(3):
        p, h = random_model(rng, M=16, N=9)
        lam = rng.uniform(0, 2, 16)
        fd = central_difference(lambda v: np.diff(logits(p, h, v))[0], lam)
        np.testing.assert_allclose(saliency(p, h, lam), np.abs(fd), rtol=1e-4, atol=1e-9)
        batch = rng.uniform(0, 2, (3, 16))
        np.testing.assert_allclose(saliency(p, h, batch)[1], saliency(p, h, batch[1]), rtol=1e-13)


def test_saliency_zero_weights(rng):
    _, h = random_model(rng, M=8, N=4)
    p = SgrParams(np.zeros((4, 8)), rng.normal(size=4))
    assert np.all(saliency(p, h, rng.uniform(0, 2, 8)) == 0)


def test_init_is_glorot_and_seeded():
    p, h = init_model(256, 128, 5)
    limit = np.sqrt(6 / (256 + 128))
    assert np.abs(p.W).max() <= limit and np.abs(p.W).max() > 0.95 * limit
    assert np.all(p.b == 0) and np.all(h.c == 0)
    assert np.abs(h.V).max() <= np.sqrt(6 / (128 + 2))
    q, _ = init_model(256, 128, 5)
    assert np.array_equal(p.W, q.W)
    assert not np.array_equal(p.W, init_model(256, 128, 6)[0].W)


def test_train_config_validation():
    for bad in ({"learning_rate": -1}, {"validation_fraction": 0.5}, {"validation_fraction": 0},
                {"batch_size": 0}, {"epochs": -1}, {"n_components": 0}):
        with pytest.raises(ValueError):
            TrainConfig(**bad)
    c = TrainConfig(corpus={"count": 5})
    assert c.corpus.count == 5
    assert TrainConfig().fingerprint() == TrainConfig().fingerprint()


def test_zero_learning_rate_keeps_initialization(small_features):
    X, y = small_features
    base = dict(corpus=SMALL, n_components=16, grid_size=32, seed=4)
    p0, h0, _ = fit_sgr(X, y, TrainConfig(epochs=0, **base))
    p1, h1, log = fit_sgr(X, y, TrainConfig(epochs=1, learning_rate=0.0, **base))
    assert len(log) == 2
    for a, b in ((p0.W, p1.W), (p0.b, p1.b), (h0.V, h1.V), (h0.c, h1.c)):
        assert np.array_equal(a, b)
    # without preconditioning the initialization is the raw Glorot draw
    p2, h2, _ = fit_sgr(X, y, TrainConfig(epochs=1, learning_rate=0.0, precondition=False, **base))
    pi, hi = init_model(32, 16, 4)
    assert np.array_equal(p2.W, pi.W) and np.array_equal(h2.V, hi.V)


def test_training_deterministic(small_features):
    X, y = small_features
    config = TrainConfig(corpus=SMALL, n_components=16, grid_size=32, epochs=3, seed=1)
    a = fit_sgr(X, y, config)
    b = fit_sgr(X, y, config)
    assert np.array_equal(a[0].W, b[0].W) and np.array_equal(a[1].V, b[1].V)
    assert a[2] == b[2]


def test_loss_non_increasing_at_small_learning_rate(small_features):
    X, y = small_features
    for precondition in (True, False):
        config = TrainConfig(corpus=SMALL, n_components=16, grid_size=32, epochs=15,
                             learning_rate=1e-4, seed=2, precondition=precondition)
        losses = [r.train_loss for r in fit_sgr(X, y, config)[2]]
        assert np.all(np.diff(losses) <= 0), losses


def test_training_learns_small_corpus(small_features):
    X, y = small_features
    config = TrainConfig(corpus=SMALL, n_components=32, grid_size=32, epochs=30, seed=0)
    log = fit_sgr(X, y, config)[2]
    assert log[-1].train_accuracy > 0.75
    assert log[-1].train_loss < log[0].train_loss


def test_divergence_reports_epoch(small_features):
    X, y = small_features
    config = TrainConfig(corpus=SMALL, n_components=16, grid_size=32, epochs=5,
                         learning_rate=1e200, seed=0)
    with np.errstate(all="ignore"), pytest.raises(TrainingDivergedError) as info:
        fit_sgr(X, y, config)
    assert info.value.epoch == 1


def test_fit_rejects_wrong_grid(small_features):
    X, y = small_features
    with pytest.raises(ValueError):
        fit_sgr(X, y, TrainConfig(grid_size=64))


def test_train_generates_corpus():
    corpus = CorpusConfig(count=10, sizes=(32,), degrees=(8.0,), seed=0)
    config = TrainConfig(corpus=corpus, n_components=8, grid_size=16, epochs=2)
    p, h, log = train(config)
    assert p.W.shape == (8, 16) and h.V.shape == (2, 8) and len(log) == 3


def test_save_load_round_trip(tmp_path, rng):
    p, h = random_model(rng)
    path = tmp_path / "m.npz"
    save_model(p, h, path, "fp")
    q, k, fp = load_model(path)
    assert fp == "fp"
    for a, b in ((p.W, q.W), (p.b, q.b), (h.V, k.V), (h.c, k.c)):
        assert np.array_equal(a, b) and a.dtype == b.dtype
    other = tmp_path / "n.npz"
    save_model(p, h, other, "fp")
    assert path.read_bytes() == other.read_bytes()


def test_load_rejects_bad_files(tmp_path, rng):
    junk = tmp_path / "junk.npz"
    junk.write_bytes(b"not a model")
    with pytest.raises(ModelFormatError):
        load_model(junk)
    wrong = tmp_path / "wrong.npz"
    np.savez(wrong, format=np.array("something-else"), version=np.array(1))
    with pytest.raises(ModelFormatError):
        load_model(wrong)
    old = tmp_path / "old.npz"
    np.savez(old, format=np.array("specrep-sgr"), version=np.array(99))
    with pytest.raises(ModelFormatError, match="version"):
        load_model(old)


def test_loaded_model_rejects_other_grid(tmp_path):
    p, h = init_model(256, 16, 0)
    save_model(p, h, tmp_path / "m.npz")
    q, _, _ = load_model(tmp_path / "m.npz")
    with pytest.raises(ValueError, match="M=256"):
        embed(q, np.zeros(128))


def test_write_log_csv(tmp_path, small_features):
    X, y = small_features
    log = fit_sgr(X, y, TrainConfig(corpus=SMALL, n_components=8, grid_size=32, epochs=2))[2]
    path = tmp_path / "log.csv"
    write_log_csv(path, log)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,train_loss,train_accuracy,val_loss,val_accuracy"
    assert len(lines) == 4 and lines[1].startswith("0,")
