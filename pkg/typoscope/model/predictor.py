# ---------------------------------------------------------------------------
# Typoscope
#
# predictor.py
#
# Typology prediction models (hand-feature, neural, combined, bias-only and
# the EC adapter), their predictions, and the unified model file.
# ---------------------------------------------------------------------------

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
import logging
import numpy
from typing import Dict, Optional

from typoscope import const, corpus, docio, ecbaseline, util
from typoscope.exceptions import CatalogMismatchError, ConfigError, \
                                 DataError, EmptyDataError, ShapeError
from typoscope.features import hand, neural
from typoscope.model import scorer


logger = logging.getLogger(__name__)


@dataclass
class Prediction:
    language_id: str
    probabilities: Dict[str, float]
    model_kind: str = const.ModelKind.HAND

    def resolve(self, relations):
        """Predictions for the given relations; relations the model never
        saw take the UNK entry."""
        out = dict()
        for r in relations:
            if r in self.probabilities:
                out[r] = self.probabilities[r]
            elif const.UNK_RELATION in self.probabilities:
                out[r] = self.probabilities[const.UNK_RELATION]
            else:
                raise DataError("no prediction for relation {0}".format(r))
        return out


class PredictionWriter:

    def make_body(self, pred):
        return {
            "language": pred.language_id,
            "model_kind": pred.model_kind,
            "predictions": [{"relation": r, "p_right": p}
                            for r, p in sorted(pred.probabilities.items())],
        }

    def write(self, filename, pred):
        docio.DocumentWriter("prediction").write(filename,
                                                 self.make_body(pred))


class PredictionReader:

    def read(self, filename):
        doc = docio.DocumentReader(["prediction"]).read(filename)
        try:
            probs = {e["relation"]: float(e["p_right"])
                     for e in doc["predictions"]}
            return Prediction(doc["language"], probs,
                              doc.get("model_kind", const.ModelKind.HAND))
        except (KeyError, TypeError, ValueError) as ex:
            raise DataError("{0}: malformed prediction document ({1})"
                            .format(filename, ex))


@dataclass(frozen=True)
class NetSpec:
    depth: int = 1
    hidden: int = 128
    activation: str = const.Activation.SIGMOID
    dropout_rate: float = 0.0

    def __post_init__(self):
        if self.activation not in const.Activation.ALL:
            raise ConfigError("unknown activation {0}".format(
                self.activation))
        self.dims(0)

    def dims(self, input_dim):
        return scorer.ScoringDims(input_dim, self.hidden, self.depth,
                                  self.activation, self.dropout_rate)


@dataclass(frozen=True)
class ModelSpec:
    """Architecture of a model, one grid-point's worth of settings."""
    kind: str = const.ModelKind.HAND
    hand_net: NetSpec = field(default_factory=lambda: NetSpec(
        1, 128, const.Activation.SIGMOID, 0.4))
    neural_net: NetSpec = field(default_factory=lambda: NetSpec(
        1, 128, const.Activation.RELU, 0.2))
    features: hand.FeatureConfig = field(default_factory=hand.FeatureConfig)
    emb_size: int = 128
    rnn_size: int = 32
    pooling: neural.PoolingSpec = field(default_factory=neural.PoolingSpec)
    alpha: float = const.Defaults.ALPHA
    max_len: int = const.Defaults.MAX_LEN
    ec_window: Optional[int] = const.Defaults.EC_WINDOW

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must be in [0, 1], got {0}".format(
                self.alpha))
        if self.max_len < 1:
            raise ConfigError("max_len must be at least 1, got {0}".format(
                self.max_len))
        if self.emb_size < 1 or self.rnn_size < 1:
            raise ConfigError("embedding and hidden state sizes must be "
                              "positive")
        if self.ec_window is not None and self.ec_window < 1:
            raise ConfigError("window must be positive, got {0}".format(
                self.ec_window))


class AbstractModel(ABC):

    kind = None

    def __init__(self):
        self.metadata = dict()

    @property
    @abstractmethod
    def relations(self):
        pass

    @abstractmethod
    def scores(self, c):
        pass

    def predict(self, c):
        probs = scorer.to_directionality(self.scores(c))
        return Prediction(c.language_id, probs, self.kind)


class HandModel(AbstractModel):

    kind = const.ModelKind.HAND

    def __init__(self, cfg, tags, params):
        super(HandModel, self).__init__()
        self.cfg = cfg
        self.featurizer = hand.HandFeaturizer(cfg, tags)
        self.params = params
        if params.input_dim != self.featurizer.dim:
            raise ShapeError("hand scoring network input",
                             self.featurizer.dim, params.input_dim)

    @property
    def relations(self):
        return self.params.relations

    @property
    def tags(self):
        return self.featurizer.inventory.real_tags

    def scores(self, c):
        return scorer.score(self.featurizer.featurize(c), self.params)

    # training interface

    def prepare_example(self, c):
        return self.featurizer.featurize(c).values

    def trainable_arrays(self):
        return self.params.named_arrays("hand.")

    def weight_names(self):
        return ["hand." + n for n in self.params.weight_names()]

    def forward(self, example, dropout_rng=None):
        return scorer.ScoringNetwork(self.params).forward(example,
                                                          dropout_rng)

    def backward(self, cache, ds):
        grads, _ = scorer.ScoringNetwork(self.params).backward(cache, ds)
        return {"hand." + k: g for k, g in grads.items()}


class BiasModel(HandModel):
    """The no-feature baseline: one learned bias per relation."""

    kind = const.ModelKind.BIAS

    def __init__(self, params):
        super(BiasModel, self).__init__(hand.FeatureConfig.bias_only(), [],
                                        params)


class NeuralModel(AbstractModel):

    kind = const.ModelKind.NEURAL

    def __init__(self, gru, pooling, params, max_len=const.Defaults.MAX_LEN):
        super(NeuralModel, self).__init__()
        self.gru = gru
        self.pooling = pooling
        self.featurizer = neural.NeuralFeaturizer(gru, pooling)
        self.params = params
        self.max_len = max_len
        if params.input_dim != self.featurizer.dim:
            raise ShapeError("neural scoring network input",
                             self.featurizer.dim, params.input_dim)

    @property
    def relations(self):
        return self.params.relations

    def scores(self, c):
        s, _ = self.forward(self.prepare_example(c))
        return scorer.ScoreVector(self.params.relations, s)

    def prepare_example(self, c):
        filtered = corpus.length_filter(c, self.max_len)
        if len(filtered) == 0:
            raise EmptyDataError("no sentences of length <= {0} in {1}"
                                 .format(self.max_len, c.language_id))
        return filtered

    def trainable_arrays(self):
        return self.params.named_arrays("neural.") + \
            self.gru.named_arrays("gru.")

    def weight_names(self):
        return ["neural." + n for n in self.params.weight_names()] + \
            ["gru.emb", "gru.Wz", "gru.Wr", "gru.Wh"]

    def forward(self, example, dropout_rng=None):
        values, feat_cache = self.featurizer.forward(example)
        s, net_cache = scorer.ScoringNetwork(self.params).forward(
            values, dropout_rng)
        return s, (feat_cache, net_cache)

    def backward(self, cache, ds):
        feat_cache, net_cache = cache
        grads, dx = scorer.ScoringNetwork(self.params).backward(net_cache, ds)
        out = {"neural." + k: g for k, g in grads.items()}
        for k, g in self.featurizer.backward(feat_cache, dx).items():
            out["gru." + k] = g
        return out


class CombinedModel(AbstractModel):
    """Weighted product of experts of a hand and a neural model."""

    kind = const.ModelKind.COMBINED

    def __init__(self, hand_model, neural_model, alpha=const.Defaults.ALPHA):
        super(CombinedModel, self).__init__()
        if list(hand_model.relations) != list(neural_model.relations):
            raise CatalogMismatchError("combined sub-models must share one "
                                       "relation catalog")
        self.hand_model = hand_model
        self.neural_model = neural_model
        self.alpha = alpha

    @property
    def relations(self):
        return self.hand_model.relations

    def scores(self, c):
        return scorer.combine(self.hand_model.scores(c),
                              self.neural_model.scores(c), self.alpha)

    def prepare_example(self, c):
        return (self.hand_model.prepare_example(c),
                self.neural_model.prepare_example(c))

    def trainable_arrays(self):
        return self.hand_model.trainable_arrays() + \
            self.neural_model.trainable_arrays()

    def weight_names(self):
        return self.hand_model.weight_names() + \
            self.neural_model.weight_names()

    def forward(self, example, dropout_rng=None):
        sh, ch = self.hand_model.forward(example[0], dropout_rng)
        sn, cn = self.neural_model.forward(example[1], dropout_rng)
        return self.alpha * sh + (1.0 - self.alpha) * sn, (ch, cn)

    def backward(self, cache, ds):
        ch, cn = cache
        grads = self.hand_model.backward(ch, self.alpha * ds)
        grads.update(self.neural_model.backward(cn, (1.0 - self.alpha) * ds))
        return grads


class ECModelAdapter(AbstractModel):
    """Gives the EC heuristic the model interface; unseen relations get
    the 0.5 fallback through the UNK entry."""

    kind = const.ModelKind.EC

    def __init__(self, ec_model):
        super(ECModelAdapter, self).__init__()
        self.ec_model = ec_model

    @property
    def relations(self):
        return self.ec_model.relations() + [const.UNK_RELATION]

    def scores(self, c):
        """Log-odds of the predictions; certain sides score -inf or inf."""
        probs = self.predict(c).probabilities
        return scorer.ScoreVector(self.relations, numpy.array(
            [util.logit(probs[r]) for r in self.relations]))

    def predict(self, c):
        if self.ec_model.max_len is not None:
            c = corpus.length_filter(c, self.ec_model.max_len)
        probs = ecbaseline.ec_predict(self.ec_model, c)
        probs[const.UNK_RELATION] = 0.5
        return Prediction(c.language_id, probs, self.kind)


class ModelFactory:

    @staticmethod
    def create_instance(spec, stats, tags, rng, dropout_rate=None):
        """Creates a freshly initialized model.

        :param stats: InitStats of the training languages.
        :param tags: tag inventory of the training corpora.
        :param dropout_rate: overrides the dropout rate of the networks.
        """
        def net_dims(net, input_dim):
            dims = net.dims(input_dim)
            if dropout_rate is not None:
                dims = scorer.ScoringDims(dims.input_dim, dims.hidden,
                                          dims.depth, dims.activation,
                                          dropout_rate)
            return dims

        def make_hand(cfg, model_tags):
            dim = hand.HandFeaturizer(cfg, model_tags).dim
            return HandModel(cfg, model_tags, scorer.init_scoring(
                stats, net_dims(spec.hand_net, dim), rng))

        def make_neural():
            gru = neural.GruParams.initialize(tags, spec.emb_size,
                                              spec.rnn_size, rng)
            dim = len(spec.pooling.betas) * spec.rnn_size
            return NeuralModel(gru, spec.pooling, scorer.init_scoring(
                stats, net_dims(spec.neural_net, dim), rng), spec.max_len)

        if spec.kind == const.ModelKind.BIAS:
            return BiasModel(scorer.init_scoring(
                stats, net_dims(spec.hand_net, 0), rng))
        elif spec.kind == const.ModelKind.HAND:
            return make_hand(spec.features, tags)
        elif spec.kind == const.ModelKind.NEURAL:
            return make_neural()
        elif spec.kind == const.ModelKind.COMBINED:
            h = make_hand(spec.features, tags)
            return CombinedModel(h, make_neural(), spec.alpha)
        raise ValueError("model kind {0} is not trained by gradient "
                         "descent".format(spec.kind))


def dims_to_dict(dims):
    return {
        "input_dim": dims.input_dim,
        "hidden": dims.hidden,
        "depth": dims.depth,
        "activation": dims.activation,
        "dropout_rate": dims.dropout_rate,
    }


def dims_from_dict(d):
    return scorer.ScoringDims(int(d["input_dim"]), int(d["hidden"]),
                              int(d["depth"]), d["activation"],
                              float(d["dropout_rate"]))


class ModelWriter:
    """Writes the unified model file.

    The header lists the model kind, the relation catalog, the network
    shapes and feature settings; the parameter blocks follow in declared
    order (see docs/source/formats.rst).
    """

    def make_body(self, m):
        if isinstance(m, ECModelAdapter):
            return ecbaseline.ECModelWriter().make_body(m.ec_model)
        body = {
            "model_kind": m.kind,
            "metadata": m.metadata,
            "relations": list(m.relations),
        }
        if isinstance(m, HandModel):
            self._hand_header(body, m)
        elif isinstance(m, NeuralModel):
            self._neural_header(body, m)
        elif isinstance(m, CombinedModel):
            self._hand_header(body, m.hand_model)
            self._neural_header(body, m.neural_model)
            body["alpha"] = m.alpha
        else:
            raise ValueError("cannot write model {0}".format(m))
        body["blocks"] = docio.encode_blocks(m.trainable_arrays())
        return body

    def _hand_header(self, body, m):
        body["features"] = m.cfg.to_dict()
        body["feature_tags"] = list(m.tags)
        body["feature_dim"] = m.featurizer.dim
        body["hand_network"] = dims_to_dict(m.params.dims)

    def _neural_header(self, body, m):
        body["gru"] = {
            "tags": m.gru.tags,
            "emb_size": m.gru.emb_size,
            "rnn_size": m.gru.rnn_size,
        }
        body["pooling"] = {
            "betas": [repr(float(b)) for b in m.pooling.betas],
            "max_sentences": m.pooling.max_sentences,
        }
        body["max_len"] = m.max_len
        body["neural_network"] = dims_to_dict(m.params.dims)

    def dumps(self, m):
        return docio.DocumentWriter("model").dumps(self.make_body(m))

    def write(self, filename, m):
        docio.DocumentWriter("model").write(filename, self.make_body(m))


class ModelReader:

    def from_document(self, doc, source="<document>"):
        kind = doc.get("model_kind")
        if kind == const.ModelKind.EC:
            return ECModelAdapter(ecbaseline.ECModelReader()
                                  .from_document(doc))
        try:
            blocks = docio.decode_blocks(doc["blocks"])
            relations = doc["relations"]
            if kind in (const.ModelKind.HAND, const.ModelKind.BIAS):
                m = self._hand(doc, blocks, relations, kind)
            elif kind == const.ModelKind.NEURAL:
                m = self._neural(doc, blocks, relations)
            elif kind == const.ModelKind.COMBINED:
                m = CombinedModel(
                    self._hand(doc, blocks, relations, const.ModelKind.HAND),
                    self._neural(doc, blocks, relations),
                    float(doc["alpha"]))
            else:
                raise DataError("{0}: unknown model kind {1}".format(source,
                                                                     kind))
        except KeyError as ex:
            raise DataError("{0}: missing model field {1}".format(source, ex))
        m.metadata = doc.get("metadata", dict())
        return m

    def _arrays(self, blocks, prefix, names):
        return {n: blocks[prefix + n] for n in names}

    def _hand(self, doc, blocks, relations, kind):
        dims = dims_from_dict(doc["hand_network"])
        names = scorer.ScoringParams(
            relations, dims, self._zeros(relations, dims)).layer_names()
        params = scorer.ScoringParams(relations, dims,
                                      self._arrays(blocks, "hand.", names))
        if kind == const.ModelKind.BIAS:
            return BiasModel(params)
        cfg = hand.FeatureConfig.from_dict(doc["features"])
        return HandModel(cfg, doc["feature_tags"], params)

    def _neural(self, doc, blocks, relations):
        dims = dims_from_dict(doc["neural_network"])
        names = scorer.ScoringParams(
            relations, dims, self._zeros(relations, dims)).layer_names()
        params = scorer.ScoringParams(relations, dims,
                                      self._arrays(blocks, "neural.", names))
        gru = neural.GruParams(doc["gru"]["tags"],
                               self._arrays(blocks, "gru.",
                                            neural.PARAM_NAMES))
        pooling = neural.PoolingSpec(
            tuple(float(b) for b in doc["pooling"]["betas"]),
            int(doc["pooling"]["max_sentences"]))
        return NeuralModel(gru, pooling, params, int(doc["max_len"]))

    def _zeros(self, relations, dims):
        arrays = dict()
        width = dims.input_dim
        for k in range(1, dims.depth + 1):
            arrays["W{0}".format(k)] = numpy.zeros((dims.hidden, width))
            arrays["b{0}".format(k)] = numpy.zeros(dims.hidden)
            width = dims.hidden
        arrays["V"] = numpy.zeros((len(relations), width))
        arrays["bV"] = numpy.zeros(len(relations))
        return arrays

    def read(self, filename):
        doc = docio.DocumentReader(["model"]).read(filename)
        m = self.from_document(doc, filename)
        logger.debug("read %s model from %s", m.kind, filename)
        return m


def model_summary(m):
    n = sum(a.size for _, a in m.trainable_arrays()) \
        if hasattr(m, "trainable_arrays") else 0
    return "{0} model, {1} relations, {2} parameters".format(
        m.kind, len(m.relations), n)

