# ---------------------------------------------------------------------------
# Typoscope
#
# hand.py
#
# Hand-engineered corpus features: tag prevalence means over windowed
# neighborhoods and the conditional/joint/PMI/asymmetry templates built on
# them.
# ---------------------------------------------------------------------------

from dataclasses import dataclass, field
import logging
import numpy
from typing import Tuple

from typoscope import const, corpus, util
from typoscope.exceptions import CatalogMismatchError, ConfigError, \
                                 DataError, EmptyDataError


logger = logging.getLogger(__name__)

FRACTION = "frac"
UNCONDITIONED = "*"

# template name, family flag that enables it
TEMPLATES = (
    ("uncond", const.FeatureFamily.CONDITIONAL),
    ("cond", const.FeatureFamily.CONDITIONAL),
    ("joint", const.FeatureFamily.JOINT),
    ("pmi", const.FeatureFamily.PMI),
    ("pmi-inv", const.FeatureFamily.PMI),
    ("asym", const.FeatureFamily.ASYMMETRY),
)


def b_measure(b):
    return "b{0}".format(b)


@dataclass(frozen=True)
class WindowSpec:
    size: int           # signed: negative sizes look leftward
    truncated: bool = False

    @property
    def label(self):
        return "{0:+d}{1}".format(self.size, "^" if self.truncated else "")

    def mirror(self):
        return WindowSpec(-self.size, self.truncated)


@dataclass(frozen=True)
class FeatureConfig:
    windows: Tuple[int, ...] = (1, 3, 8, 100, -1, -3, -8, -100)
    families: Tuple[str, ...] = const.FeatureFamily.ALL
    b_values: Tuple[int, ...] = (1, 2)
    lam: float = const.Defaults.LAMBDA
    length_thresholds: Tuple[int, ...] = (const.Defaults.MAX_LEN,)

    def __post_init__(self):
        if len(self.windows) == 0:
            raise ConfigError("no feature windows")
        for w in self.windows:
            if w == 0:
                raise ConfigError("feature window size must be non-zero")
        for f in self.families:
            if f not in const.FeatureFamily.ALL:
                raise ConfigError("unknown feature family {0}".format(f))
        for b in self.b_values:
            if b < 1:
                raise ConfigError("b must be positive, got {0}".format(b))
        if self.lam < 0:
            raise ConfigError("lambda must be non-negative, got {0}"
                              .format(self.lam))
        if len(self.length_thresholds) == 0:
            raise ConfigError("no length thresholds")
        for n in self.length_thresholds:
            if n < 1:
                raise ConfigError("length threshold must be positive, got {0}"
                                  .format(n))

    @property
    def is_empty(self):
        """True for the bias-only configuration that emits no features."""
        return not any(f in self.families
                       for f in const.FeatureFamily.TEMPLATES)

    def window_specs(self):
        specs = [WindowSpec(w) for w in self.windows]
        if const.FeatureFamily.TRUNCATED in self.families:
            specs.extend(WindowSpec(w, True) for w in self.windows)
        return specs

    def measures(self):
        m = [FRACTION]
        if const.FeatureFamily.B_THRESHOLD in self.families:
            m.extend(b_measure(b) for b in self.b_values)
        return m

    def table_specs(self):
        """Window specs whose tables are needed, mirrors for asymmetry
        included."""
        specs = self.window_specs()
        if const.FeatureFamily.ASYMMETRY in self.families:
            for s in list(specs):
                if s.size > 0 and s.mirror() not in specs:
                    specs.append(s.mirror())
        return specs

    def to_dict(self):
        return {
            "windows": list(self.windows),
            "families": list(self.families),
            "b_values": list(self.b_values),
            "lambda": self.lam,
            "length_thresholds": list(self.length_thresholds),
        }

    @staticmethod
    def from_dict(d):
        known = ("windows", "families", "b_values", "lambda",
                 "length_thresholds")
        for k in d:
            if k not in known:
                raise ConfigError("unknown feature setting {0}".format(k))
        defaults = FeatureConfig()
        try:
            return FeatureConfig(
                windows=tuple(int(w) for w in d.get("windows",
                                                    defaults.windows)),
                families=tuple(d.get("families", defaults.families)),
                b_values=tuple(int(b) for b in d.get("b_values",
                                                     defaults.b_values)),
                lam=float(d.get("lambda", defaults.lam)),
                length_thresholds=tuple(
                    int(n) for n in d.get("length_thresholds",
                                          defaults.length_thresholds)))
        except (TypeError, ValueError) as ex:
            raise ConfigError("malformed feature settings: {0}".format(ex))

    @staticmethod
    def bias_only():
        return FeatureConfig(families=())


class TagInventory:
    """Anchor tags s (real tags) and context tags t (real tags and '#')."""

    def __init__(self, tags):
        self.real_tags = sorted(set(tags) - {const.BOUNDARY_TAG})
        self.context_tags = sorted(set(self.real_tags) | {const.BOUNDARY_TAG})
        self.context_index = {t: k for k, t in enumerate(self.context_tags)}
        self.real_index = {t: k for k, t in enumerate(self.real_tags)}

    def __eq__(self, other):
        return isinstance(other, TagInventory) and \
            self.real_tags == other.real_tags

    def __repr__(self):
        return "TagInventory({0})".format(" ".join(self.real_tags))


class FeatureCatalog:

    def __init__(self, names):
        self.names = list(names)
        self.index = {name: k for k, name in enumerate(self.names)}
        if len(self.index) != len(self.names):
            raise DataError("duplicate feature names in catalog")

    def __len__(self):
        return len(self.names)

    def __eq__(self, other):
        return isinstance(other, FeatureCatalog) and self.names == other.names

    def __repr__(self):
        return "FeatureCatalog[{0} features]".format(len(self.names))


@dataclass
class FeatureVector:
    values: numpy.ndarray
    catalog: FeatureCatalog = field(default=None, compare=False)

    def __len__(self):
        return len(self.values)

    def get(self, name):
        return self.values[self.catalog.index[name]]


@dataclass
class PrevalenceTable:
    """Smoothed prevalence means of one window spec and measure.

    pi_t has one entry per context tag; pi_ts[s, t] is indexed by anchor tag
    and context tag. The raw sums and position counts are kept as well.
    """
    window: WindowSpec
    measure: str
    pi_t: numpy.ndarray
    pi_ts: numpy.ndarray
    g_sum: numpy.ndarray
    n: int
    g_sum_s: numpy.ndarray
    n_s: numpy.ndarray


def clipped_ratio(x, y):
    """x // y = min(x / y, 1), taking 0 // 0 = x // 0 = 1."""
    if y <= 0:
        return 1.0
    return min(x / y, 1.0)


def clipped_ratio_array(x, y):
    x = numpy.asarray(x, dtype=float)
    y = numpy.asarray(y, dtype=float)
    out = numpy.ones(numpy.broadcast(x, y).shape)
    x, y = numpy.broadcast_arrays(x, y)
    pos = y > 0
    out[pos] = numpy.minimum(x[pos] / y[pos], 1.0)
    return out


class WindowStatistics:
    """Tag counts in the (possibly truncated) right window of every real
    token of a corpus.

    Tags outside the inventory get their own columns past the context tags
    so that they fill window slots and truncate correctly, but they are
    never reported.
    """

    def __init__(self, c, size, truncated, inventory):
        self.size = size
        self.truncated = truncated
        vocab = dict(inventory.context_index)
        for seq in c.tag_sequences:
            for t in seq:
                if t not in vocab:
                    vocab[t] = len(vocab)
        self.n_context = len(inventory.context_tags)
        pad = vocab[const.BOUNDARY_TAG]

        windows = []
        anchors = []
        for seq in c.tag_sequences:
            codes = numpy.array([vocab[t] for t in seq], dtype=int)
            n = len(codes) - 2
            padded = numpy.concatenate([codes, numpy.full(size, pad,
                                                          dtype=int)])
            idx = numpy.arange(1, n + 1)[:, None] + 1 + \
                numpy.arange(size)[None, :]
            windows.append(padded[idx])
            anchors.append(codes[1:n + 1])
        win = numpy.concatenate(windows) if windows else \
            numpy.zeros((0, size), dtype=int)
        self.anchors = numpy.concatenate(anchors) if anchors else \
            numpy.zeros(0, dtype=int)

        if truncated:
            stop = (win == pad) | (win == self.anchors[:, None])
            valid = numpy.cumsum(stop, axis=1) == 0
        else:
            valid = numpy.ones(win.shape, dtype=bool)
        k = win.shape[0]
        self.counts = numpy.zeros((k, len(vocab)))
        rows = numpy.arange(k)
        for m in range(size):
            self.counts[rows, win[:, m]] += valid[:, m]
        self.lengths = valid.sum(axis=1)

        # anchor code -> anchor row (-1 for tags outside the inventory)
        self.anchor_rows = numpy.full(len(vocab), -1, dtype=int)
        for t, code in vocab.items():
            if t in inventory.real_index:
                self.anchor_rows[code] = inventory.real_index[t]
        self.n_real = len(inventory.real_tags)

    def g(self, measure):
        """Returns (g values of defined positions, their anchor codes)."""
        if measure == FRACTION:
            defined = self.lengths > 0
            g = self.counts[defined, :self.n_context] / \
                self.lengths[defined, None]
            return g, self.anchors[defined]
        b = int(measure[1:])
        return (self.counts[:, :self.n_context] >= b).astype(float), \
            self.anchors

    def table(self, measure, lam, window):
        g, anchors = self.g(measure)
        n = g.shape[0]
        g_sum = g.sum(axis=0)
        rows = self.anchor_rows[anchors]
        sel = rows >= 0
        g_sum_s = numpy.zeros((self.n_real, self.n_context))
        numpy.add.at(g_sum_s, rows[sel], g[sel])
        n_s = numpy.bincount(rows[sel], minlength=self.n_real)
        return smooth_table(window, measure, g_sum, n, g_sum_s, n_s, lam)


def smooth_table(window, measure, g_sum, n, g_sum_s, n_s, lam):
    """Backoff smoothing of the prevalence means.

    pi_t   = (sum_j g(t|j) + lam * m) / (n + lam), m the unsmoothed mean of
             g over all positions and context tags;
    pi_t|s = (sum_{j: T_j = s} g(t|j) + lam * pi_t) / (n_s + lam).
    A zero denominator leaves pi_t at 0 and pi_t|s at pi_t.
    """
    n_context = len(g_sum)
    m = g_sum.sum() / (n * n_context) if n > 0 and n_context > 0 else 0.0
    if n + lam > 0:
        pi_t = (g_sum + lam * m) / (n + lam)
    else:
        pi_t = numpy.zeros(n_context)
    denom = n_s.astype(float) + lam
    pi_ts = numpy.tile(pi_t, (len(n_s), 1))
    ok = denom > 0
    pi_ts[ok] = (g_sum_s[ok] + lam * pi_t[None, :]) / denom[ok, None]
    return PrevalenceTable(window, measure, pi_t, pi_ts, g_sum, n, g_sum_s,
                           n_s)


def prevalence_tables(c, cfg, inventory=None):
    """Computes the prevalence tables of every window spec and measure.

    Negative windows are computed on the mirror-image corpus.

    :return: dict (WindowSpec, measure) -> PrevalenceTable
    """
    if len(c.tag_sequences) == 0:
        raise EmptyDataError("no sentences in {0}".format(c.language_id))
    if inventory is None:
        inventory = TagInventory(c.tag_inventory())
    mirrored = None
    tables = dict()
    for spec in cfg.table_specs():
        if spec.size > 0:
            source = c
        else:
            if mirrored is None:
                mirrored = corpus.corpus_reversed(c)
            source = mirrored
        stats = WindowStatistics(source, abs(spec.size), spec.truncated,
                                 inventory)
        for measure in cfg.measures():
            tables[(spec, measure)] = stats.table(measure, cfg.lam, spec)
    return tables


def _block_names(prefix, template, spec, measure, inventory):
    head = "{0}/{1}/w{2}/{3}".format(prefix, template, spec.label, measure)
    if template == "uncond":
        return ["{0}/{1}/{2}".format(head, UNCONDITIONED, t)
                for t in inventory.context_tags]
    return ["{0}/{1}/{2}".format(head, s, t)
            for s in inventory.real_tags for t in inventory.context_tags]


def _block_values(template, spec, measure, tables, inventory):
    tab = tables[(spec, measure)]
    if template == "uncond":
        return tab.pi_t
    if template == "cond":
        return tab.pi_ts.ravel()
    if template == "joint":
        cols = [inventory.context_index[s] for s in inventory.real_tags]
        pi_s = tab.pi_t[cols]
        return (tab.pi_ts * pi_s[:, None]).ravel()
    if template == "pmi":
        return clipped_ratio_array(tab.pi_ts, tab.pi_t[None, :]).ravel()
    if template == "pmi-inv":
        return clipped_ratio_array(tab.pi_t[None, :], tab.pi_ts).ravel()
    mirror = tables[(spec.mirror(), measure)]
    return clipped_ratio_array(tab.pi_ts, mirror.pi_ts).ravel()


def _blocks(cfg):
    """Yields (template, window spec, measure) in catalog order."""
    for template, family in TEMPLATES:
        if family not in cfg.families:
            continue
        for spec in cfg.window_specs():
            if template == "asym" and spec.size < 0:
                continue
            for measure in cfg.measures():
                yield template, spec, measure


class HandFeaturizer:
    """Featurizes corpora against a fixed configuration and tag inventory."""

    def __init__(self, cfg, tags):
        self.cfg = cfg
        self.inventory = tags if isinstance(tags, TagInventory) \
            else TagInventory(tags)
        self._catalog = None

    def catalog(self):
        if self._catalog is None:
            names = []
            for thr in self.cfg.length_thresholds:
                prefix = "len{0}".format(thr)
                for template, spec, measure in _blocks(self.cfg):
                    names.extend(_block_names(prefix, template, spec, measure,
                                              self.inventory))
            self._catalog = FeatureCatalog(names)
        return self._catalog

    @property
    def dim(self):
        return len(self.catalog())

    def _warn_unknown_tags(self, c):
        unknown = set()
        for tags in c.real_tags():
            unknown.update(t for t in tags
                           if t not in self.inventory.real_index)
        if len(unknown) > 0:
            logger.warning("%s: tags outside the feature inventory: %s",
                           c.language_id, " ".join(sorted(unknown)))

    def featurize(self, c):
        if self.cfg.is_empty:
            return FeatureVector(numpy.zeros(0), self.catalog())
        self._warn_unknown_tags(c)
        parts = []
        for thr in self.cfg.length_thresholds:
            filtered = corpus.length_filter(c, thr)
            if len(filtered) == 0:
                raise EmptyDataError("no sentences of length <= {0} in {1}"
                                     .format(thr, c.language_id))
            tables = prevalence_tables(filtered, self.cfg, self.inventory)
            for template, spec, measure in _blocks(self.cfg):
                parts.append(_block_values(template, spec, measure, tables,
                                           self.inventory))
        values = numpy.concatenate(parts) if parts else numpy.zeros(0)
        fv = FeatureVector(values, self.catalog())
        if len(values) != len(fv.catalog):
            raise CatalogMismatchError("{0} feature values for {1} catalog "
                                       "entries".format(len(values),
                                                        len(fv.catalog)))
        logger.debug("featurized %s: %d hand features", c.language_id,
                     len(values))
        return fv


def featurize_hand(c, cfg, tags=None):
    """Featurizes one corpus; the tag inventory defaults to the corpus's."""
    if tags is None:
        tags = c.tag_inventory()
    return HandFeaturizer(cfg, tags).featurize(c)


class FeatureVectorWriter:

    HEADER = ["feature", "value"]

    def write(self, filename, fv):
        util.write_tsv(filename, self.HEADER,
                       zip(fv.catalog.names, (float(v) for v in fv.values)))
