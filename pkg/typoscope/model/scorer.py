# ---------------------------------------------------------------------------
# Typoscope
#
# scorer.py
#
# The depth-d feed-forward network that maps a corpus feature vector to one
# score per relation, and the logistic transform of scores into
# directionalities.
# ---------------------------------------------------------------------------

from dataclasses import dataclass
import logging
import numpy

from typoscope import const, util
from typoscope.exceptions import CatalogMismatchError, ConfigError, \
                                 ShapeError
from typoscope.features.neural import xavier_uniform


logger = logging.getLogger(__name__)


class ActivationFactory:

    @staticmethod
    def create_instance(name):
        if name == const.Activation.SIGMOID:
            return SigmoidActivation()
        elif name == const.Activation.RELU:
            return ReluActivation()
        raise ConfigError("unknown activation {0}".format(name))


class SigmoidActivation:

    name = const.Activation.SIGMOID

    def apply(self, a):
        return util.logistic(a)

    def derivative(self, a, out):
        return out * (1.0 - out)


class ReluActivation:

    name = const.Activation.RELU

    def apply(self, a):
        return numpy.maximum(a, 0.0)

    def derivative(self, a, out):
        return (a > 0).astype(float)


@dataclass(frozen=True)
class ScoringDims:
    input_dim: int
    hidden: int = 128
    depth: int = 1
    activation: str = const.Activation.SIGMOID
    dropout_rate: float = 0.0

    def __post_init__(self):
        if self.depth < 0:
            raise ConfigError("depth must be non-negative")
        if self.depth > 0 and self.hidden < 1:
            raise ConfigError("hidden size must be positive")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("dropout rate must be in [0, 1)")


class ScoringParams:
    """Weights of s(x) = V psi(W_d ... psi(W_1 x + b_1) ... + b_d) + b_V.

    Arrays are keyed W1, b1, ..., Wd, bd, V, bV. Dropout is not inverted:
    hidden outputs are masked during training and scaled by (1 - rate) at
    inference.
    """

    def __init__(self, relations, dims, arrays):
        self.relations = list(relations)
        self.relation_index = {r: k for k, r in enumerate(self.relations)}
        self.dims = dims
        self.arrays = arrays
        self.activation = ActivationFactory.create_instance(dims.activation)
        self.check_shapes()

    def __repr__(self):
        return "ScoringParams[depth {0}, input {1}, hidden {2}, {3} " \
            "relations]".format(self.depth, self.input_dim, self.dims.hidden,
                                len(self.relations))

    @property
    def depth(self):
        return self.dims.depth

    @property
    def input_dim(self):
        return self.dims.input_dim

    def layer_names(self):
        names = []
        for k in range(1, self.depth + 1):
            names.extend(["W{0}".format(k), "b{0}".format(k)])
        return names + ["V", "bV"]

    def weight_names(self):
        """Names of the L2-regularized arrays (biases excluded)."""
        return [n for n in self.layer_names() if not n.startswith("b")]

    def check_shapes(self):
        n_rel = len(self.relations)
        width = self.input_dim
        for k in range(1, self.depth + 1):
            w = self.arrays["W{0}".format(k)]
            if w.shape != (self.dims.hidden, width):
                raise ShapeError("W{0}".format(k), (self.dims.hidden, width),
                                 w.shape)
            width = self.dims.hidden
        if self.arrays["V"].shape != (n_rel, width):
            raise ShapeError("V", (n_rel, width), self.arrays["V"].shape)
        if self.arrays["bV"].shape != (n_rel,):
            raise ShapeError("bV", (n_rel,), self.arrays["bV"].shape)

    def named_arrays(self, prefix=""):
        return [(prefix + n, self.arrays[n]) for n in self.layer_names()]

    def copy(self):
        return ScoringParams(self.relations, self.dims,
                             {k: a.copy() for k, a in self.arrays.items()})


@dataclass
class ScoreVector:
    relations: list
    values: numpy.ndarray

    def __len__(self):
        return len(self.values)


class ScoringNetwork:
    """Forward and backward passes of the scoring network."""

    def __init__(self, params):
        self.params = params

    def forward(self, x, dropout_rng=None):
        """Returns (scores, cache).

        With dropout_rng, hidden outputs are dropped at the configured rate;
        without it, they are scaled by the keep probability.
        """
        p = self.params
        x = numpy.asarray(x, dtype=float)
        if x.shape != (p.input_dim,):
            raise ShapeError("feature vector", p.input_dim,
                             x.shape[0] if x.ndim == 1 else x.shape)
        rate = p.dims.dropout_rate
        a = x
        layers = []
        for k in range(1, p.depth + 1):
            pre = p.arrays["W{0}".format(k)] @ a + p.arrays["b{0}".format(k)]
            out = p.activation.apply(pre)
            if rate > 0:
                if dropout_rng is not None:
                    mask = (dropout_rng.random(out.shape) >= rate) \
                        .astype(float)
                else:
                    mask = numpy.full(out.shape, 1.0 - rate)
            else:
                mask = None
            layers.append((a, pre, out, mask))
            a = out * mask if mask is not None else out
        s = p.arrays["V"] @ a + p.arrays["bV"]
        return s, (layers, a)

    def backward(self, cache, ds):
        """Returns (gradients by array name, gradient w.r.t. the input)."""
        p = self.params
        layers, a = cache
        grads = dict()
        grads["V"] = numpy.outer(ds, a)
        grads["bV"] = ds.copy()
        da = p.arrays["V"].T @ ds
        for k in reversed(range(1, p.depth + 1)):
            a_in, pre, out, mask = layers[k - 1]
            if mask is not None:
                da = da * mask
            dpre = da * p.activation.derivative(pre, out)
            grads["W{0}".format(k)] = numpy.outer(dpre, a_in)
            grads["b{0}".format(k)] = dpre
            da = p.arrays["W{0}".format(k)].T @ dpre
        return grads, da


def score(feat, p):
    """Inference scores of one feature vector."""
    values = feat.values if hasattr(feat, "values") else feat
    s, _ = ScoringNetwork(p).forward(values)
    return ScoreVector(p.relations, s)


def to_directionality(scores):
    p = util.logistic(scores.values)
    return {r: float(v) for r, v in zip(scores.relations, p)}


def combine(hand_scores, neural_scores, alpha):
    """Product of experts: alpha * s_hand + (1 - alpha) * s_neural."""
    if list(hand_scores.relations) != list(neural_scores.relations):
        raise CatalogMismatchError("hand and neural models have different "
                                   "relation catalogs")
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError("alpha must be in [0, 1], got {0}".format(alpha))
    return ScoreVector(hand_scores.relations,
                       alpha * hand_scores.values +
                       (1.0 - alpha) * neural_scores.values)


def relation_catalog(stats):
    """Training relations in sorted order, then the UNK entry."""
    return sorted(stats.relations()) + [const.UNK_RELATION]


def unk_pbar(stats):
    if len(stats.pbar) == 0:
        return 0.5
    return sum(stats.pbar.values()) / len(stats.pbar)


def output_bias(pbar):
    clip = const.Defaults.BIAS_CLIP
    return util.clip(util.logit(pbar), -clip, clip)


def init_scoring(stats, dims, rng):
    """V = 0, b_V = clipped logit of the weighted mean directionality,
    Xavier-uniform hidden weights and zero hidden biases."""
    relations = relation_catalog(stats)
    pbar = dict(stats.pbar)
    pbar[const.UNK_RELATION] = unk_pbar(stats)
    arrays = dict()
    width = dims.input_dim
    for k in range(1, dims.depth + 1):
        arrays["W{0}".format(k)] = xavier_uniform(rng, (dims.hidden, width),
                                                  width, dims.hidden)
        arrays["b{0}".format(k)] = numpy.zeros(dims.hidden)
        width = dims.hidden
    arrays["V"] = numpy.zeros((len(relations), width))
    arrays["bV"] = numpy.array([output_bias(pbar[r]) for r in relations])
    p = ScoringParams(relations, dims, arrays)
    logger.debug("initialized %s", p)
    return p
