# ---------------------------------------------------------------------------
# Typoscope
#
# test_neural.py
#
# Performs unit tests on functions and class methods declared in
# features/neural.py.
# ---------------------------------------------------------------------------

import math
import numpy
import pytest

from typoscope import corpus
from typoscope.exceptions import EmptyDataError, ShapeError
from typoscope.features import neural


TAGS = ["ADJ", "DET", "NOUN", "VERB"]


def make_params(seed=3, emb_size=3, rnn_size=4):
    rng = numpy.random.default_rng(seed)
    p = neural.GruParams.initialize(TAGS, emb_size, rnn_size, rng)
    # non-zero biases exercise their gradients
    for b in ("bz", "br", "bh"):
        p.arrays[b][:] = rng.uniform(-0.3, 0.3, size=rnn_size)
    return p


def small_corpus():
    return corpus.TaggedCorpus.from_tag_lists("x", [
        ["DET", "NOUN", "VERB"],
        ["NOUN", "VERB", "DET", "ADJ", "NOUN"],
        ["VERB"],
        ["PRON", "VERB", "NOUN"],
    ])


def numeric_gradient(fn, a, eps=1e-6):
    g = numpy.zeros_like(a)
    it = numpy.nditer(a, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        keep = a[idx]
        a[idx] = keep + eps
        up = fn()
        a[idx] = keep - eps
        down = fn()
        a[idx] = keep
        g[idx] = (up - down) / (2.0 * eps)
    return g


def test_GruParams_initialize():
    p = make_params()

    assert p.tags == ["#", "ADJ", "DET", "NOUN", "VERB"]
    assert p.arrays["emb"].shape == (6, 3)
    assert p.arrays["Wz"].shape == (4, 7)
    rec = p.recurrent_block("Wh")
    numpy.testing.assert_allclose(rec @ rec.T, numpy.eye(4), atol=1e-12)

    q = neural.GruParams.initialize(TAGS, 3, 4, numpy.random.default_rng(3))
    numpy.testing.assert_array_equal(q.arrays["emb"], p.arrays["emb"])
    assert numpy.all(q.arrays["bz"] == 0.0)


def test_GruParams_check_shapes():
    p = make_params()
    arrays = {k: a.copy() for k, a in p.arrays.items()}
    arrays["Wr"] = numpy.zeros((4, 6))

    with pytest.raises(ShapeError):
        neural.GruParams(p.tags, arrays)


def test_GruParams_codes():
    p = make_params()

    assert p.codes(["#", "DET", "PRON", "#"]) == [0, 2, p.oov_row, 0]


def test_GruEncoder_forward():
    p = make_params()
    seqs = list(small_corpus().tag_sequences)
    f, _ = neural.GruEncoder(p).forward(seqs)

    assert f.shape == (4, 4)
    assert numpy.all(numpy.abs(f) < 1.0)
    # padding does not leak into shorter sequences
    for k, seq in enumerate(seqs):
        numpy.testing.assert_allclose(f[k], neural.gru_encode(seq, p),
                                      atol=1e-14)


def test_GruEncoder_backward():
    p = make_params()
    seqs = list(small_corpus().tag_sequences)
    w = numpy.random.default_rng(11).standard_normal((4, 4))
    enc = neural.GruEncoder(p)

    def loss():
        f, _ = enc.forward(seqs)
        return float((w * f).sum())

    _, cache = enc.forward(seqs)
    grads = enc.backward(cache, w)
    for name in neural.PARAM_NAMES:
        expected = numeric_gradient(loss, p.arrays[name])
        numpy.testing.assert_allclose(grads[name], expected, rtol=1e-5,
                                      atol=1e-8)


def test_soft_pool_identities():
    rng = numpy.random.default_rng(5)
    f = rng.uniform(-0.9, 0.9, size=(7, 3))
    fp = (f + 1.0) / 2.0

    numpy.testing.assert_allclose(neural.soft_pool(f, 1.0), fp.mean(axis=0),
                                  atol=1e-9)
    numpy.testing.assert_allclose(neural.soft_pool(f, 0.0),
                                  numpy.prod(fp, axis=0) ** (1.0 / 7),
                                  atol=1e-9)
    numpy.testing.assert_allclose(neural.soft_pool(f, -1.0),
                                  7.0 / (1.0 / fp).sum(axis=0), atol=1e-9)
    numpy.testing.assert_array_equal(neural.soft_pool(f, math.inf),
                                     fp.max(axis=0))
    numpy.testing.assert_array_equal(neural.soft_pool(f, -math.inf),
                                     fp.min(axis=0))


def test_soft_pool_monotone():
    rng = numpy.random.default_rng(6)
    f = rng.uniform(-1.0, 1.0, size=(20, 5))
    betas = [-math.inf, -4.0, -1.0, 0.0, 0.5, 1.0, 4.0, math.inf]
    pooled = [neural.soft_pool(f, b) for b in betas]

    for lo, hi in zip(pooled, pooled[1:]):
        assert numpy.all(lo <= hi + 1e-12)
    assert numpy.all(pooled[0] >= 0.0)
    assert numpy.all(pooled[-1] <= 1.0)


def test_soft_pool_monotone_random_matrices():
    rng = numpy.random.default_rng(16)
    betas = [-math.inf, -8.0, -2.0, -0.5, 0.0, 0.25, 1.0, 3.0, 8.0, math.inf]

    for _ in range(100):
        n = int(rng.integers(1, 30))
        f = rng.uniform(-1.0, 1.0, size=(n, 4))
        pooled = [neural.soft_pool(f, b) for b in betas]
        for lo, hi in zip(pooled, pooled[1:]):
            assert numpy.all(lo <= hi + 1e-9)
        fp = neural.f_prime(f)
        assert numpy.array_equal(pooled[0], fp.min(axis=0))
        assert numpy.array_equal(pooled[-1], fp.max(axis=0))


def test_soft_pool_floor():
    f = numpy.array([[-1.0, 0.0], [0.5, 0.0]])
    pooled = neural.soft_pool(f, 0.0)

    assert numpy.all(numpy.isfinite(pooled))
    assert pooled[0] == pytest.approx(math.sqrt(1e-12 * 0.75))


def test_soft_pool_empty():
    with pytest.raises(EmptyDataError):
        neural.soft_pool(numpy.zeros((0, 3)), 1.0)


@pytest.mark.parametrize("beta", [-2.0, -1.0, 0.0, 0.5, 1.0, 3.0,
                                  math.inf, -math.inf])
def test_soft_pool_backward(beta):
    rng = numpy.random.default_rng(8)
    f = rng.uniform(-0.9, 0.9, size=(5, 3))
    w = rng.standard_normal(3)

    def loss():
        return float((w * neural.soft_pool(f, beta)).sum())

    pooled, fp = neural.soft_pool_forward(f, beta)
    d_f = neural.soft_pool_backward(f, fp, pooled, beta, w)
    numpy.testing.assert_allclose(d_f, numeric_gradient(loss, f), rtol=1e-5,
                                  atol=1e-8)


def test_NeuralFeaturizer_catalog():
    nf = neural.NeuralFeaturizer(make_params(),
                                 neural.PoolingSpec(betas=(-1.0, 0.0,
                                                           math.inf)))

    assert nf.dim == 12
    assert nf.catalog().names[0] == "beta-1/h0"
    assert nf.catalog().names[4] == "beta+0/h0"
    assert nf.catalog().names[-1] == "beta+inf/h3"


def test_NeuralFeaturizer_featurize():
    p = make_params()
    c = small_corpus()
    fv = neural.featurize_neural(c, p)

    assert len(fv) == len(neural.PoolingSpec().betas) * 4
    assert numpy.all((fv.values >= 0.0) & (fv.values <= 1.0))
    numpy.testing.assert_array_equal(fv.values,
                                     neural.featurize_neural(c, p).values)

    with pytest.raises(EmptyDataError):
        neural.featurize_neural(corpus.TaggedCorpus("x", ()), p)


def test_NeuralFeaturizer_sentences():
    p = make_params()
    c = small_corpus()
    nf = neural.NeuralFeaturizer(p, neural.PoolingSpec(max_sentences=2))
    head = corpus.TaggedCorpus("x", c.tag_sequences[:2])

    assert len(nf.sentences(c)) == 2
    numpy.testing.assert_array_equal(nf.featurize(c).values,
                                     neural.featurize_neural(head, p,
                                                             nf.spec).values)


def test_NeuralFeaturizer_backward():
    p = make_params()
    c = small_corpus()
    nf = neural.NeuralFeaturizer(p, neural.PoolingSpec(betas=(-1.0, 0.0,
                                                              2.0)))
    w = numpy.random.default_rng(9).standard_normal(nf.dim)

    def loss():
        values, _ = nf.forward(c)
        return float((w * values).sum())

    _, cache = nf.forward(c)
    grads = nf.backward(cache, w)
    for name in ("emb", "Wz", "bh"):
        numpy.testing.assert_allclose(grads[name],
                                      numeric_gradient(loss, p.arrays[name]),
                                      rtol=1e-5, atol=1e-8)


def test_PoolingSpec():
    with pytest.raises(ValueError):
        neural.PoolingSpec(betas=())
    with pytest.raises(ValueError):
        neural.PoolingSpec(max_sentences=0)
