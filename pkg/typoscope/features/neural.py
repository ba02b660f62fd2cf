# ---------------------------------------------------------------------------
# Typoscope
#
# neural.py
#
# GRU sentence encoder over tag sequences and inverse-temperature
# soft-pooling of the sentence encodings into corpus features.
# ---------------------------------------------------------------------------

from dataclasses import dataclass
import logging
import math
import numpy
from typing import Tuple

from typoscope import const
from typoscope.exceptions import ConfigError, DataError, \
                                 EmptyDataError, ShapeError
from typoscope.features.hand import FeatureCatalog, FeatureVector


logger = logging.getLogger(__name__)

F_PRIME_FLOOR = 1e-12

PARAM_NAMES = ("emb", "Wz", "bz", "Wr", "br", "Wh", "bh")


def sigmoid(a):
    return 0.5 * (1.0 + numpy.tanh(0.5 * a))


def xavier_uniform(rng, shape, fan_in, fan_out):
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)


def random_orthogonal(rng, n):
    q, r = numpy.linalg.qr(rng.standard_normal((n, n)))
    return q * numpy.sign(numpy.diag(r))[None, :]


class GruParams:
    """Embedding and gate parameters of the encoder.

    Gate matrices act on the concatenation [x; h] of the tag embedding and
    the previous hidden state. The last embedding row serves tags outside
    the inventory.
    """

    def __init__(self, tags, arrays):
        self.tags = list(tags)
        self.tag_index = {t: k for k, t in enumerate(self.tags)}
        self.arrays = arrays
        self.check_shapes()

    @property
    def oov_row(self):
        return len(self.tags)

    @property
    def emb_size(self):
        return self.arrays["emb"].shape[1]

    @property
    def rnn_size(self):
        return self.arrays["Wz"].shape[0]

    def check_shapes(self):
        v = len(self.tags) + 1
        emb = self.arrays["emb"]
        if emb.shape[0] != v:
            raise ShapeError("embedding rows", v, emb.shape[0])
        e = emb.shape[1]
        h = self.arrays["Wz"].shape[0]
        for w in ("Wz", "Wr", "Wh"):
            if self.arrays[w].shape != (h, e + h):
                raise ShapeError(w, (h, e + h), self.arrays[w].shape)
        for b in ("bz", "br", "bh"):
            if self.arrays[b].shape != (h,):
                raise ShapeError(b, (h,), self.arrays[b].shape)

    def codes(self, seq):
        oov = self.oov_row
        return [self.tag_index.get(t, oov) for t in seq]

    @staticmethod
    def zeros(tags, emb_size, rnn_size):
        v = len(tags) + 1
        arrays = {"emb": numpy.zeros((v, emb_size))}
        for w, b in (("Wz", "bz"), ("Wr", "br"), ("Wh", "bh")):
            arrays[w] = numpy.zeros((rnn_size, emb_size + rnn_size))
            arrays[b] = numpy.zeros(rnn_size)
        return GruParams(tags, arrays)

    @staticmethod
    def initialize(tags, emb_size, rnn_size, rng):
        """Xavier-uniform input blocks and embeddings, random orthogonal
        recurrent blocks, zero biases."""
        tags = sorted(set(tags) | {const.BOUNDARY_TAG})
        p = GruParams.zeros(tags, emb_size, rnn_size)
        v = len(tags) + 1
        p.arrays["emb"][:] = xavier_uniform(rng, (v, emb_size), v, emb_size)
        for w in ("Wz", "Wr", "Wh"):
            p.arrays[w][:, :emb_size] = xavier_uniform(
                rng, (rnn_size, emb_size), emb_size + rnn_size, rnn_size)
            p.arrays[w][:, emb_size:] = random_orthogonal(rng, rnn_size)
        return p

    def recurrent_block(self, name):
        return self.arrays[name][:, self.emb_size:]

    def named_arrays(self, prefix="gru."):
        return [(prefix + name, self.arrays[name]) for name in PARAM_NAMES]

    def copy(self):
        return GruParams(self.tags, {k: a.copy()
                                     for k, a in self.arrays.items()})


@dataclass(frozen=True)
class PoolingSpec:
    betas: Tuple[float, ...] = const.Defaults.POOL_BETAS
    max_sentences: int = const.Defaults.POOL_MAX_SENTENCES

    def __post_init__(self):
        if len(self.betas) == 0:
            raise ConfigError("no pooling betas")
        if self.max_sentences < 1:
            raise ConfigError("max_sentences must be positive")


def batch_codes(seqs, params):
    """Pads encoded sequences into (codes, mask) of shape (B, T)."""
    b = len(seqs)
    t_max = max(len(s) for s in seqs) if b > 0 else 0
    codes = numpy.zeros((b, t_max), dtype=int)
    mask = numpy.zeros((b, t_max))
    for k, seq in enumerate(seqs):
        codes[k, :len(seq)] = params.codes(seq)
        mask[k, :len(seq)] = 1.0
    return codes, mask


class GruEncoder:
    """Batched forward and backward passes of the encoder."""

    def __init__(self, params):
        self.params = params

    def forward(self, seqs):
        """Returns the final hidden states F (B x H) and a cache for
        backward."""
        p = self.params.arrays
        e = self.params.emb_size
        codes, mask = batch_codes(seqs, self.params)
        b = codes.shape[0]
        h = numpy.zeros((b, self.params.rnn_size))
        steps = []
        for t in range(codes.shape[1]):
            x = p["emb"][codes[:, t]]
            xh = numpy.concatenate([x, h], axis=1)
            z = sigmoid(xh @ p["Wz"].T + p["bz"])
            r = sigmoid(xh @ p["Wr"].T + p["br"])
            xrh = numpy.concatenate([x, r * h], axis=1)
            hc = numpy.tanh(xrh @ p["Wh"].T + p["bh"])
            h_new = (1.0 - z) * h + z * hc
            m = mask[:, t][:, None]
            steps.append((xh, xrh, z, r, hc, h, m))
            h = m * h_new + (1.0 - m) * h
        return h, (codes, steps, e)

    def backward(self, cache, d_final):
        p = self.params.arrays
        codes, steps, e = cache
        grads = {k: numpy.zeros_like(a) for k, a in p.items()}
        dh = d_final
        for t in reversed(range(len(steps))):
            xh, xrh, z, r, hc, h_prev, m = steps[t]
            dh_step = m * dh
            dh_prev = (1.0 - m) * dh + dh_step * (1.0 - z)
            dz = dh_step * (hc - h_prev)
            dhc = dh_step * z

            da_h = dhc * (1.0 - hc * hc)
            grads["Wh"] += da_h.T @ xrh
            grads["bh"] += da_h.sum(axis=0)
            dxrh = da_h @ p["Wh"]
            dx = dxrh[:, :e]
            drh = dxrh[:, e:]
            dr = drh * h_prev
            dh_prev += drh * r

            da_z = dz * z * (1.0 - z)
            da_r = dr * r * (1.0 - r)
            grads["Wz"] += da_z.T @ xh
            grads["bz"] += da_z.sum(axis=0)
            grads["Wr"] += da_r.T @ xh
            grads["br"] += da_r.sum(axis=0)
            dxh = da_z @ p["Wz"] + da_r @ p["Wr"]
            dx = dx + dxh[:, :e]
            dh_prev += dxh[:, e:]

            numpy.add.at(grads["emb"], codes[:, t], dx)
            dh = dh_prev
        return grads


def gru_encode(seq, params):
    """Final hidden state of one boundary-augmented tag sequence."""
    f, cache = GruEncoder(params).forward([seq])
    return f[0]


def f_prime(f):
    return numpy.maximum((f + 1.0) / 2.0, F_PRIME_FLOOR)


def soft_pool(f, beta):
    """Power mean over sentences of f' = (f + 1) / 2 with exponent beta.

    beta = 0 is the geometric mean; beta = +inf/-inf are max/min.

    :param f: matrix of per-sentence vectors, one row per sentence.
    """
    pooled, _ = soft_pool_forward(numpy.asarray(f, dtype=float), beta)
    return pooled


def soft_pool_forward(f, beta):
    if f.shape[0] == 0:
        raise EmptyDataError("nothing to pool")
    fp = f_prime(f)
    if math.isinf(beta):
        pooled = fp.max(axis=0) if beta > 0 else fp.min(axis=0)
    elif beta == 0:
        pooled = numpy.exp(numpy.log(fp).mean(axis=0))
    else:
        mean = (fp ** beta).mean(axis=0)
        pooled = mean ** (1.0 / beta)
    return pooled, fp


def soft_pool_backward(f, fp, pooled, beta, d_pooled):
    """Gradient of the pooled vector with respect to f."""
    n = f.shape[0]
    if math.isinf(beta):
        pick = fp.argmax(axis=0) if beta > 0 else fp.argmin(axis=0)
        d_fp = numpy.zeros_like(fp)
        d_fp[pick, numpy.arange(fp.shape[1])] = d_pooled
    elif beta == 0:
        d_fp = d_pooled[None, :] * pooled[None, :] / (n * fp)
    else:
        mean = pooled ** beta
        d_fp = d_pooled[None, :] * pooled[None, :] * fp ** (beta - 1.0) / \
            (n * mean[None, :])
    # f' is clipped at the floor
    live = (f + 1.0) / 2.0 > F_PRIME_FLOOR
    return 0.5 * d_fp * live


class NeuralFeaturizer:

    def __init__(self, params, spec=None):
        self.params = params
        self.spec = spec if spec is not None else PoolingSpec()
        self.encoder = GruEncoder(params)

    def catalog(self):
        return FeatureCatalog(
            "beta{0}/h{1}".format(format_beta(beta), k)
            for beta in self.spec.betas
            for k in range(self.params.rnn_size))

    @property
    def dim(self):
        return len(self.spec.betas) * self.params.rnn_size

    def sentences(self, c):
        if len(c.tag_sequences) == 0:
            raise EmptyDataError("no sentences in {0}".format(c.language_id))
        seqs = c.tag_sequences[:self.spec.max_sentences]
        if len(seqs) < len(c.tag_sequences):
            logger.debug("pooling the first %d of %d sentences of %s",
                         len(seqs), len(c.tag_sequences), c.language_id)
        return seqs

    def forward(self, c):
        seqs = self.sentences(c)
        f, enc_cache = self.encoder.forward(seqs)
        parts = []
        pools = []
        for beta in self.spec.betas:
            pooled, fp = soft_pool_forward(f, beta)
            parts.append(pooled)
            pools.append((beta, fp, pooled))
        values = numpy.concatenate(parts)
        if not numpy.all(numpy.isfinite(values)):
            raise DataError("non-finite neural features for {0}"
                            .format(c.language_id))
        return values, (f, enc_cache, pools)

    def backward(self, cache, d_values):
        f, enc_cache, pools = cache
        h = self.params.rnn_size
        d_f = numpy.zeros_like(f)
        for k, (beta, fp, pooled) in enumerate(pools):
            d_f += soft_pool_backward(f, fp, pooled, beta,
                                      d_values[k * h:(k + 1) * h])
        return self.encoder.backward(enc_cache, d_f)

    def featurize(self, c):
        values, _ = self.forward(c)
        return FeatureVector(values, self.catalog())


def format_beta(beta):
    if math.isinf(beta):
        return "+inf" if beta > 0 else "-inf"
    return "{0:+g}".format(beta)


def featurize_neural(c, params, spec=None):
    return NeuralFeaturizer(params, spec).featurize(c)
