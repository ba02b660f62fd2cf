# ---------------------------------------------------------------------------
# Typoscope
#
# training.py
#
# The epsilon-insensitive training objective, its gradient and the
# SGD/RMSProp training loop (one language per step).
# ---------------------------------------------------------------------------

from dataclasses import dataclass
import logging
import math
import numpy
from typing import Optional

from typoscope import const, corpus, util
from typoscope.exceptions import ConfigError, DivergenceError


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    eps: float = const.Defaults.EPS
    l2_coeff: float = 0.0
    dropout_rate: Optional[float] = None    # None keeps the model's rates
    optimizer: str = const.Optimizer.SGD
    learning_rate: Optional[float] = None   # None picks the optimizer default
    rmsprop_decay: float = const.Defaults.RMSPROP_DECAY
    rmsprop_stabilizer: float = const.Defaults.RMSPROP_STABILIZER
    epochs: int = const.Defaults.EPOCHS
    seed: int = const.Defaults.SEED
    resampling: str = const.Resampling.NONE
    resample_fraction: float = 0.5
    checkpoint: bool = True

    def __post_init__(self):
        if self.eps < 0:
            raise ConfigError("eps must be non-negative")
        if self.l2_coeff < 0:
            raise ConfigError("l2 coefficient must be non-negative")
        if self.dropout_rate is not None and \
                not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("dropout rate must be in [0, 1)")
        if self.optimizer not in const.Optimizer.ALL:
            raise ConfigError("unknown optimizer {0}".format(self.optimizer))
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")
        if self.resampling not in const.Resampling.ALL:
            raise ConfigError("unknown resampling {0}"
                              .format(self.resampling))

    @property
    def effective_learning_rate(self):
        if self.learning_rate is not None:
            return self.learning_rate
        if self.optimizer == const.Optimizer.RMSPROP:
            return const.Defaults.RMSPROP_LEARNING_RATE
        return const.Defaults.SGD_LEARNING_RATE

    def to_dict(self):
        return {
            "eps": self.eps,
            "l2_coeff": self.l2_coeff,
            "optimizer": self.optimizer,
            "learning_rate": self.effective_learning_rate,
            "rmsprop_decay": self.rmsprop_decay,
            "rmsprop_stabilizer": self.rmsprop_stabilizer,
            "epochs": self.epochs,
            "seed": self.seed,
            "resampling": self.resampling,
        }


class TrainingExample:
    """One training language: its unparsed corpus and gold directionality.

    prepared caches the model input computed from the corpus.
    """

    def __init__(self, language_id, corpus, gold, prepared=None):
        self.language_id = language_id
        self.corpus = corpus
        self.gold = gold
        self.prepared = prepared


class TrainResult:

    def __init__(self, model, curve=None, best_epoch=0):
        self.model = model
        self.curve = curve if curve is not None else []  # index = epoch
        self.best_epoch = best_epoch

    @property
    def best_objective(self):
        return self.curve[self.best_epoch]


class OptimizerFactory:

    @staticmethod
    def create_instance(cfg):
        if cfg.optimizer == const.Optimizer.RMSPROP:
            return RMSPropOptimizer(cfg.effective_learning_rate,
                                    cfg.rmsprop_decay, cfg.rmsprop_stabilizer)
        return SGDOptimizer(cfg.effective_learning_rate)


class SGDOptimizer:

    def __init__(self, learning_rate):
        self.learning_rate = learning_rate

    def step(self, arrays, grads):
        for name, a in arrays:
            a -= self.learning_rate * grads[name]


class RMSPropOptimizer:

    def __init__(self, learning_rate, decay, stabilizer):
        self.learning_rate = learning_rate
        self.decay = decay
        self.stabilizer = stabilizer
        self.mean_square = dict()

    def step(self, arrays, grads):
        for name, a in arrays:
            g = grads[name]
            ms = self.mean_square.get(name)
            if ms is None:
                ms = numpy.zeros_like(a)
                self.mean_square[name] = ms
            ms *= self.decay
            ms += (1.0 - self.decay) * g * g
            a -= self.learning_rate * g / (numpy.sqrt(ms) + self.stabilizer)


def relation_rows(model, gold):
    """Catalog row of every gold relation, UNK for unseen ones."""
    index = {r: k for k, r in enumerate(model.relations)}
    unk = index.get(const.UNK_RELATION)
    rows = []
    for r, e in gold.entries.items():
        k = index.get(r, unk)
        if k is None:
            raise ConfigError("relation {0} is not in the model catalog"
                              .format(r))
        rows.append((k, e))
    return rows


def language_loss(model, example, eps, dropout_rng=None, with_grad=True):
    """Loss of one language and, optionally, its parameter gradients.

    The subgradient of the epsilon-insensitive loss is taken as 0 inside
    the ball and at its edge.
    """
    s, cache = model.forward(example.prepared, dropout_rng)
    p = util.logistic(s)
    ds = numpy.zeros_like(s)
    loss = 0.0
    for k, e in relation_rows(model, example.gold):
        diff = p[k] - e.p_right
        excess = abs(diff) - eps
        if excess > 0:
            loss += e.rel_freq * excess
            ds[k] += e.rel_freq * math.copysign(1.0, diff) * p[k] * \
                (1.0 - p[k])
    if not with_grad:
        return loss, None
    return loss, model.backward(cache, ds)


def l2_penalty(model):
    weights = set(model.weight_names())
    return sum(float(numpy.sum(a * a)) for name, a in model.trainable_arrays()
               if name in weights)


def prepare(model, examples):
    for ex in examples:
        if ex.prepared is None:
            ex.prepared = model.prepare_example(ex.corpus)
    return examples


def objective(model, examples, cfg):
    """Mean loss over languages plus l2_coeff times the squared weights."""
    prepare(model, examples)
    if len(examples) == 0:
        return cfg.l2_coeff * l2_penalty(model)
    total = 0.0
    for ex in examples:
        loss, _ = language_loss(model, ex, cfg.eps, with_grad=False)
        total += loss
    return total / len(examples) + cfg.l2_coeff * l2_penalty(model)


def add_l2_gradient(model, grads, l2_coeff, scale=1.0):
    if l2_coeff == 0:
        return grads
    weights = set(model.weight_names())
    for name, a in model.trainable_arrays():
        if name in weights:
            grads[name] = grads[name] + scale * 2.0 * l2_coeff * a
    return grads


def gradients(model, examples, cfg):
    """Gradient of the full objective (no dropout)."""
    prepare(model, examples)
    total = {name: numpy.zeros_like(a)
             for name, a in model.trainable_arrays()}
    for ex in examples:
        _, g = language_loss(model, ex, cfg.eps)
        for name in total:
            total[name] += g[name] / len(examples)
    return add_l2_gradient(model, total, cfg.l2_coeff)


def snapshot(model):
    return [a.copy() for _, a in model.trainable_arrays()]


def restore(model, saved):
    for (name, a), b in zip(model.trainable_arrays(), saved):
        a[...] = b


def check_finite(value, epoch, language_id=None):
    if not math.isfinite(value):
        where = " at language {0}".format(language_id) if language_id else ""
        raise DivergenceError("objective became {0} in epoch {1}{2}; try a "
                              "smaller learning rate".format(value, epoch,
                                                             where))


def train(model, examples, cfg):
    """Trains a model in place and returns a TrainResult.

    Each epoch visits the languages in a seeded random order and takes one
    optimizer step per language. With checkpointing, the parameters of the
    epoch with the lowest training objective are kept (epoch 0 is the
    initialization).
    """
    prepare(model, examples)
    arrays = model.trainable_arrays()
    optimizer = OptimizerFactory.create_instance(cfg)
    shuffle_rng = util.derive_rng(cfg.seed, "shuffle")
    dropout_rng = util.derive_rng(cfg.seed, "dropout")
    resample_rng = util.derive_rng(cfg.seed, "resample")

    obj = objective(model, examples, cfg)
    check_finite(obj, 0)
    result = TrainResult(model, [obj], 0)
    best = snapshot(model) if cfg.checkpoint else None
    logger.debug("epoch 0: objective %.6f", obj)

    for epoch in range(1, cfg.epochs + 1):
        for k in shuffle_rng.permutation(len(examples)):
            ex = examples[int(k)]
            if cfg.resampling != const.Resampling.NONE:
                visit = TrainingExample(
                    ex.language_id, None, ex.gold,
                    model.prepare_example(corpus.resample(
                        ex.corpus, resample_rng, cfg.resampling,
                        cfg.resample_fraction)))
            else:
                visit = ex
            loss, grads = language_loss(model, visit, cfg.eps, dropout_rng)
            check_finite(loss, epoch, ex.language_id)
            add_l2_gradient(model, grads, cfg.l2_coeff)
            optimizer.step(arrays, grads)

        obj = objective(model, examples, cfg)
        check_finite(obj, epoch)
        result.curve.append(obj)
        if obj < result.curve[result.best_epoch]:
            result.best_epoch = epoch
            if cfg.checkpoint:
                best = snapshot(model)
        logger.debug("epoch %d: objective %.6f (best epoch %d)", epoch, obj,
                     result.best_epoch)

    if cfg.checkpoint and result.best_epoch != cfg.epochs:
        restore(model, best)
    logger.info("trained %s model on %d languages: objective %.6f -> %.6f "
                "(best epoch %d of %d)", model.kind, len(examples),
                result.curve[0], result.best_objective, result.best_epoch,
                cfg.epochs)
    return result
