# ---------------------------------------------------------------------------
# Typoscope
#
# experiment.py
#
# Experiment configuration, fold plans with fold-restricted synthetic
# languages, and the cross-validation / final-test harness.
# ---------------------------------------------------------------------------

from dataclasses import dataclass, field
import itertools
import logging
import multiprocessing
import os
from typing import Dict, List, Optional
import yaml

from typoscope import const, corpus, docio, evaluation, synth, typology, util
from typoscope.ecbaseline import ec_train
from typoscope.exceptions import ConfigError, EmptyDataError
from typoscope.features import hand, neural
from typoscope.model import predictor, training


logger = logging.getLogger(__name__)

SEED_MODULUS = 2 ** 62

DEFAULT_NETS = {
    const.ModelKind.BIAS: (0, 128, const.Activation.SIGMOID, 0.0),
    const.ModelKind.HAND: (1, 128, const.Activation.SIGMOID, 0.4),
    const.ModelKind.NEURAL: (1, 128, const.Activation.RELU, 0.2),
    const.ModelKind.COMBINED: (1, 128, const.Activation.SIGMOID, 0.4),
    const.ModelKind.EC: (0, 128, const.Activation.SIGMOID, 0.0),
}

PRESETS = {
    "bias": {"kind": const.ModelKind.BIAS},
    "hand": {"kind": const.ModelKind.HAND, "depth": 1, "hidden": 128,
             "activation": const.Activation.SIGMOID, "dropout": 0.4},
    "neural": {"kind": const.ModelKind.NEURAL, "depth": 1, "hidden": 128,
               "activation": const.Activation.RELU, "dropout": 0.2,
               "emb_size": 128, "rnn_size": 32},
    "combined": {"kind": const.ModelKind.COMBINED, "alpha": 0.7},
    "ud-only": {"kind": const.ModelKind.COMBINED, "hidden": 256,
                "activation": const.Activation.SIGMOID, "dropout": 0.2,
                "alpha": 1.0},
    "ec": {"kind": const.ModelKind.EC,
           "ec_window": const.Defaults.EC_WINDOW},
}

POINT_KEYS = ("preset", "kind", "depth", "hidden", "activation", "dropout",
              "neural_depth", "neural_hidden", "neural_activation",
              "neural_dropout", "emb_size", "rnn_size", "betas",
              "max_sentences", "alpha", "features", "max_len", "ec_window",
              "l2", "optimizer", "learning_rate", "rmsprop_decay",
              "rmsprop_stabilizer", "epochs", "resampling",
              "resample_fraction", "train_eps", "checkpoint")

CONFIG_KEYS = ("languages", "test_languages", "folds", "seed", "scheme",
               "include_root", "eps", "noise_rate", "synthetic", "base",
               "grid")

SYNTH_KEYS = ("enabled", "max_per_fold", "verb_tags", "noun_tags")


def derived_seed(seed, label, *extra):
    return int(util.derive_rng(seed, label, *extra).integers(SEED_MODULUS))


@dataclass
class LanguageEntry:
    language_id: str
    treebank: corpus.Treebank
    corpus: corpus.TaggedCorpus
    gold: typology.DirectionalityVector
    path: Optional[str] = None
    substrate: Optional[str] = None
    rv: Optional[str] = None
    rn: Optional[str] = None

    @property
    def is_synthetic(self):
        return self.substrate is not None


def load_language(path, scheme, language_id=None):
    tb = corpus.read_treebank(path, language_id)
    return LanguageEntry(tb.language_id, tb, corpus.to_tagged_corpus(tb),
                         typology.directionality(tb, scheme), path)


class FoldPlan:
    """A partition of the real training languages into folds."""

    def __init__(self, folds):
        self.folds = [sorted(f) for f in folds]

    def __len__(self):
        return len(self.folds)

    def __repr__(self):
        return "FoldPlan({0})".format(self.folds)

    @staticmethod
    def make(language_ids, k, rng):
        ids = sorted(language_ids)
        if k < 2 or k > len(ids):
            raise ConfigError("cannot split {0} languages into {1} folds"
                              .format(len(ids), k))
        order = [ids[int(i)] for i in rng.permutation(len(ids))]
        return FoldPlan([order[j::k] for j in range(k)])

    def validate(self, language_ids):
        seen = set()
        for k, f in enumerate(self.folds):
            if len(f) == 0:
                raise ConfigError("fold {0} is empty".format(k))
            for lang in f:
                if lang in seen:
                    raise ConfigError("language {0} is in more than one fold"
                                      .format(lang))
                seen.add(lang)
        missing = set(language_ids) - seen
        if missing:
            raise ConfigError("languages not in any fold: {0}".format(
                ", ".join(sorted(missing))))
        extra = seen - set(language_ids)
        if extra:
            raise ConfigError("unknown languages in folds: {0}".format(
                ", ".join(sorted(extra))))

    def held_out(self, k):
        return list(self.folds[k])

    def training_languages(self, k):
        return sorted(lang for j, f in enumerate(self.folds) if j != k
                      for lang in f)

    def admits(self, k, substrate, rv, rn):
        """A synthetic language may train fold k only if its substrate and
        superstrates are all training languages of that fold."""
        allowed = set(self.training_languages(k))
        for lang in (substrate, rv, rn):
            if lang in (synth.NONE, synth.SELF):
                continue
            if lang not in allowed:
                return False
        return True


@dataclass
class SynthSettings:
    enabled: bool = False
    max_per_fold: int = 20
    verb_tags: tuple = tuple(sorted(synth.DEFAULT_VERB_TAGS))
    noun_tags: tuple = tuple(sorted(synth.DEFAULT_NOUN_TAGS))


@dataclass
class GridPoint:
    index: int
    settings: Dict

    def __repr__(self):
        return "GridPoint[{0}: {1}]".format(self.index, self.describe())

    def describe(self):
        return ", ".join("{0}={1}".format(k, self.settings[k])
                         for k in sorted(self.settings))

    @property
    def kind(self):
        return self.settings.get("kind", const.ModelKind.HAND)

    def net_spec(self, prefix, kind):
        depth, hidden, activation, dropout = DEFAULT_NETS[kind]
        s = self.settings
        return predictor.NetSpec(
            int(s.get(prefix + "depth", depth)),
            int(s.get(prefix + "hidden", hidden)),
            s.get(prefix + "activation", activation),
            float(s.get(prefix + "dropout", dropout)))

    def model_spec(self):
        return self._converted(self._model_spec)

    def train_config(self, seed, eps):
        return self._converted(self._train_config, seed, eps)

    def _converted(self, build, *args):
        try:
            return build(*args)
        except ConfigError:
            raise
        except (TypeError, ValueError) as ex:
            raise ConfigError("grid point {0}: {1}".format(self.index, ex))

    def _model_spec(self):
        s = self.settings
        kind = self.kind
        if kind not in const.ModelKind.ALL:
            raise ConfigError("unknown model kind {0}".format(kind))
        hand_net = self.net_spec("", const.ModelKind.HAND)
        neural_net = self.net_spec("neural_", const.ModelKind.NEURAL)
        if kind == const.ModelKind.BIAS:
            hand_net = self.net_spec("", kind)
        elif kind == const.ModelKind.NEURAL:
            neural_net = self.net_spec("", kind)
        features = hand.FeatureConfig.from_dict(s.get("features", dict()))
        pooling = neural.PoolingSpec(
            tuple(float(b) for b in s.get("betas",
                                          const.Defaults.POOL_BETAS)),
            int(s.get("max_sentences", const.Defaults.POOL_MAX_SENTENCES)))
        window = s.get("ec_window", const.Defaults.EC_WINDOW)
        return predictor.ModelSpec(
            kind=kind, hand_net=hand_net, neural_net=neural_net,
            features=features, emb_size=int(s.get("emb_size", 128)),
            rnn_size=int(s.get("rnn_size", 32)), pooling=pooling,
            alpha=float(s.get("alpha", const.Defaults.ALPHA)),
            max_len=int(s.get("max_len", const.Defaults.MAX_LEN)),
            ec_window=util.parse_window(window))

    def _train_config(self, seed, eps):
        s = self.settings
        lr = s.get("learning_rate")
        return training.TrainConfig(
            eps=float(s.get("train_eps", eps)),
            l2_coeff=float(s.get("l2", 0.0)),
            optimizer=s.get("optimizer", const.Optimizer.SGD),
            learning_rate=None if lr is None else float(lr),
            rmsprop_decay=float(s.get("rmsprop_decay",
                                      const.Defaults.RMSPROP_DECAY)),
            rmsprop_stabilizer=float(s.get("rmsprop_stabilizer",
                                           const.Defaults.
                                           RMSPROP_STABILIZER)),
            epochs=int(s.get("epochs", const.Defaults.EPOCHS)),
            seed=seed,
            resampling=s.get("resampling", const.Resampling.NONE),
            resample_fraction=float(s.get("resample_fraction", 0.5)),
            checkpoint=bool(s.get("checkpoint", True)))


def expand_point(settings):
    """Applies a preset under explicitly given settings."""
    for k in settings:
        if k not in POINT_KEYS:
            raise ConfigError("unknown grid setting {0}".format(k))
    out = dict()
    preset = settings.get("preset")
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError("unknown preset {0}; choose from {1}".format(
                preset, ", ".join(sorted(PRESETS))))
        out.update(PRESETS[preset])
    out.update((k, v) for k, v in settings.items() if k != "preset")
    return out


def expand_grid(base, grid):
    """Grid points from a list of points or a dict of axes (a lattice)."""
    base = dict(base or dict())
    if grid is None:
        points = [dict()]
    elif isinstance(grid, list):
        points = [dict(p) for p in grid]
    elif isinstance(grid, dict):
        axes = sorted(grid)
        for a in axes:
            if not isinstance(grid[a], list):
                raise ConfigError("grid axis {0} must be a list".format(a))
        points = [dict(zip(axes, values))
                  for values in itertools.product(*(grid[a] for a in axes))]
    else:
        raise ConfigError("grid must be a list of points or a mapping of "
                          "axes")
    out = []
    for k, p in enumerate(points):
        merged = dict(base)
        merged.update(p)
        gp = GridPoint(k, expand_point(merged))
        gp.model_spec()
        gp.train_config(const.Defaults.SEED, const.Defaults.EPS)
        out.append(gp)
    return out


@dataclass
class ExperimentConfig:
    languages: List = field(default_factory=list)       # (id or None, path)
    test_languages: List = field(default_factory=list)
    folds: object = 5
    seed: int = const.Defaults.SEED
    scheme: str = const.RelationSchemeMode.STRIP_SUBTYPES
    include_root: bool = False
    eps: float = const.Defaults.EPS
    noise_rate: float = 0.0
    synthetic: SynthSettings = field(default_factory=SynthSettings)
    points: List[GridPoint] = field(default_factory=lambda: expand_grid(
        None, None))

    def get_reader(self):
        return ExperimentConfigReader(self)

    def relation_scheme(self):
        return typology.RelationScheme(self.scheme, self.include_root)

    def to_dict(self):
        return {
            "folds": self.folds,
            "seed": self.seed,
            "scheme": self.scheme,
            "include_root": self.include_root,
            "eps": self.eps,
            "noise_rate": self.noise_rate,
            "synthetic": {"enabled": self.synthetic.enabled,
                          "max_per_fold": self.synthetic.max_per_fold},
            "points": [p.settings for p in self.points],
        }


class ExperimentConfigReader:

    def __init__(self, cfg):
        self.obj = cfg

    def read(self, filename):
        with open(filename, "rt", encoding="utf-8") as f:
            try:
                doc = yaml.load(f, Loader=yaml.SafeLoader)
            except yaml.YAMLError as ex:
                raise ConfigError("{0}: {1}".format(filename, ex))
        return self.parse(doc, os.path.dirname(os.path.abspath(filename)))

    def parse(self, doc, base_dir="."):
        if not isinstance(doc, dict):
            raise ConfigError("experiment configuration must be a mapping")
        for k in doc:
            if k not in CONFIG_KEYS:
                raise ConfigError("unknown configuration key {0}".format(k))
        cfg = self.obj
        cfg.languages = self.parse_languages(doc.get("languages", []),
                                             base_dir)
        cfg.test_languages = self.parse_languages(
            doc.get("test_languages", []), base_dir)
        cfg.folds = doc.get("folds", cfg.folds)
        cfg.seed = util.resolve_seed(doc.get("seed"), cfg.seed)
        cfg.scheme = doc.get("scheme", cfg.scheme)
        if cfg.scheme not in const.RelationSchemeMode.ALL:
            raise ConfigError("unknown relation scheme {0}".format(
                cfg.scheme))
        cfg.include_root = bool(doc.get("include_root", cfg.include_root))
        cfg.eps = float(doc.get("eps", cfg.eps))
        cfg.noise_rate = float(doc.get("noise_rate", cfg.noise_rate))
        s = doc.get("synthetic", dict()) or dict()
        for k in s:
            if k not in SYNTH_KEYS:
                raise ConfigError("unknown synthetic setting {0}".format(k))
        cfg.synthetic = SynthSettings(
            bool(s.get("enabled", True if s else False)),
            int(s.get("max_per_fold", SynthSettings.max_per_fold)),
            tuple(s.get("verb_tags", SynthSettings.verb_tags)),
            tuple(s.get("noun_tags", SynthSettings.noun_tags)))
        cfg.points = expand_grid(doc.get("base"), doc.get("grid"))
        if len(cfg.languages) == 0:
            raise ConfigError("no training languages")
        return cfg

    def parse_languages(self, items, base_dir):
        out = []
        for item in items:
            if isinstance(item, str):
                lang_id, path = None, item
            elif isinstance(item, dict) and "path" in item:
                lang_id, path = item.get("id"), item["path"]
            else:
                raise ConfigError("language entry {0} needs a path"
                                  .format(item))
            if not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            out.append((lang_id, path))
        return out


@dataclass
class CVRow:
    point: int
    fold: int
    language: str
    loss: float
    binary_accuracy: float


@dataclass
class CVReport:
    points: List[GridPoint]
    rows: List[CVRow]
    reports: Dict[int, List[evaluation.EvalReport]]
    train_vectors: List[typology.DirectionalityVector]

    def mean_loss(self, point):
        return evaluation.mean_loss(self.reports[point])

    def mean_binary_accuracy(self, point):
        return evaluation.mean_binary_accuracy(self.reports[point])

    @property
    def best_point(self):
        """Index of the grid point with the lowest mean held-out loss; ties
        go to the earlier point."""
        return min((self.mean_loss(p.index), p.index)
                   for p in self.points)[1]


class Experiment:
    """Loaded pool, fold plan and synthetic languages of one experiment."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.scheme = cfg.relation_scheme()
        self.pool = dict()
        for lang_id, path in cfg.languages:
            e = load_language(path, self.scheme, lang_id)
            if e.language_id in self.pool:
                raise ConfigError("duplicate language {0}".format(
                    e.language_id))
            self.pool[e.language_id] = e
        self.test = [load_language(path, self.scheme, lang_id)
                     for lang_id, path in cfg.test_languages]
        self.plan = self.make_plan()
        self.tagset = sorted(set(t for e in self.pool.values()
                                 for t in e.corpus.tag_inventory()))
        self._synthetic = dict()
        self._superstrates = dict()
        logger.info("experiment with %d training languages, %d test "
                    "languages, %d folds, %d grid points, seed %d",
                    len(self.pool), len(self.test), len(self.plan),
                    len(cfg.points), cfg.seed)

    def make_plan(self):
        ids = sorted(self.pool)
        if isinstance(self.cfg.folds, int):
            plan = FoldPlan.make(ids, self.cfg.folds,
                                 util.derive_rng(self.cfg.seed, "folds"))
        else:
            plan = FoldPlan(self.cfg.folds)
        plan.validate(ids)
        return plan

    # synthetic languages

    def superstrate(self, lang, head_tags):
        key = (lang, head_tags)
        if key not in self._superstrates:
            try:
                self._superstrates[key] = typology.directionality(
                    self.pool[lang].treebank, self.scheme, set(head_tags))
            except EmptyDataError:
                logger.warning("%s has no edges under %s heads; treating it "
                               "as no superstrate", lang, "/".join(head_tags))
                self._superstrates[key] = None
        return self._superstrates[key]

    def synthetic_language(self, substrate, rv, rn):
        key = (substrate, rv, rn)
        if key not in self._synthetic:
            s = self.cfg.synthetic

            def vector(name, tags):
                if name == synth.NONE:
                    return None
                return self.superstrate(substrate if name == synth.SELF
                                        else name, tags)

            lang_id = synth.synthetic_language_id(substrate, rv, rn)
            spec = synth.SynthSpec(
                self.pool[substrate].treebank,
                vector(rv, s.verb_tags), vector(rn, s.noun_tags),
                derived_seed(self.cfg.seed, "synth:" + lang_id),
                frozenset(s.verb_tags), frozenset(s.noun_tags), self.scheme,
                rv, rn)
            tb = synth.permute(spec).treebank
            self._synthetic[key] = LanguageEntry(
                lang_id, tb, corpus.to_tagged_corpus(tb),
                typology.directionality(tb, self.scheme), None, substrate,
                rv, rn)
        return self._synthetic[key]

    def synthetic_candidates(self, train_ids):
        choices = list(train_ids) + [synth.SELF, synth.NONE]
        out = []
        for s in train_ids:
            for rv in choices:
                for rn in choices:
                    if rv == synth.NONE and rn == synth.NONE:
                        continue
                    if rv == s or rn == s:
                        continue    # spelled "self"
                    out.append((s, rv, rn))
        return out

    def synthetic_for(self, fold, train_ids):
        s = self.cfg.synthetic
        if not s.enabled or s.max_per_fold <= 0:
            return []
        candidates = self.synthetic_candidates(train_ids)
        if len(candidates) > s.max_per_fold:
            rng = util.derive_rng(self.cfg.seed, "synth-sample", fold)
            picks = sorted(int(k) for k in rng.choice(
                len(candidates), size=s.max_per_fold, replace=False))
            candidates = [candidates[k] for k in picks]
        if fold >= 0:
            for c in candidates:
                if not self.plan.admits(fold, *c):
                    raise ConfigError("synthetic language {0} uses a held-out "
                                      "language of fold {1}".format(c, fold))
        return [self.synthetic_language(*c) for c in candidates]

    # training and evaluation

    def training_set(self, fold=None):
        """Real and admitted synthetic training languages of a fold, or of
        the whole pool when fold is None."""
        if fold is None:
            ids = sorted(self.pool)
            code = -1
        else:
            ids = self.plan.training_languages(fold)
            code = fold
        return [self.pool[i] for i in ids] + self.synthetic_for(code, ids)

    def fold_seed(self, fold):
        return derived_seed(self.cfg.seed, "fold",
                            -1 if fold is None else fold)

    def train_point(self, point, fold=None):
        entries = self.training_set(fold)
        spec = point.model_spec()
        seed = self.fold_seed(fold)
        logger.info("training %s on %d languages (%d synthetic), fold %s",
                    point, len(entries),
                    sum(1 for e in entries if e.is_synthetic),
                    "all" if fold is None else fold)
        if spec.kind == const.ModelKind.EC:
            m = predictor.ECModelAdapter(ec_train(
                [e.treebank for e in entries], self.scheme, spec.ec_window,
                spec.max_len))
            m.metadata = {"seed": seed, "point": point.settings}
            return m
        stats = typology.init_stats([e.gold for e in entries])
        tags = sorted(set(t for e in entries
                          for t in e.corpus.tag_inventory()))
        train_cfg = point.train_config(seed, self.cfg.eps)
        m = predictor.ModelFactory.create_instance(
            spec, stats, tags, util.derive_rng(seed, "init"),
            train_cfg.dropout_rate)
        examples = [training.TrainingExample(e.language_id, e.corpus, e.gold)
                    for e in entries]
        result = training.train(m, examples, train_cfg)
        m.metadata = {"seed": seed, "point": point.settings,
                      "training": train_cfg.to_dict(),
                      "best_epoch": result.best_epoch,
                      "curve": result.curve}
        return m

    def evaluation_corpus(self, e):
        if self.cfg.noise_rate <= 0:
            return e.corpus
        return corpus.add_tag_noise(
            e.corpus, self.cfg.noise_rate, self.tagset,
            util.derive_rng(self.cfg.seed, "noise:" + e.language_id))

    def evaluate(self, m, entries):
        reports = []
        for e in entries:
            pred = m.predict(self.evaluation_corpus(e))
            reports.append(evaluation.aggregate_loss(
                pred.resolve(e.gold.relations()), e.gold, self.cfg.eps))
        return reports

    def run_fold(self, point, fold):
        m = self.train_point(point, fold)
        held_out = [self.pool[i] for i in self.plan.held_out(fold)]
        reports = self.evaluate(m, held_out)
        for r in reports:
            logger.info("point %d fold %d %s: loss %.6f, binary %.4f",
                        point.index, fold, r.language_id, r.aggregate_loss,
                        r.binary_accuracy)
        return reports

    def cross_validate(self, jobs=1):
        tasks = [(p.index, k) for p in self.cfg.points
                 for k in range(len(self.plan))]
        if jobs <= 1:
            init_worker(self)
            results = [run_task(t) for t in tasks]
        else:
            with multiprocessing.Pool(processes=jobs, initializer=init_worker,
                                      initargs=(self,)) as pool:
                results = list(pool.imap(run_task, tasks))
        rows = []
        reports = {p.index: [] for p in self.cfg.points}
        for (point, fold), fold_reports in zip(tasks, results):
            reports[point].extend(fold_reports)
            rows.extend(CVRow(point, fold, r.language_id, r.aggregate_loss,
                              r.binary_accuracy) for r in fold_reports)
        report = CVReport(self.cfg.points, rows, reports,
                          [e.gold for e in self.pool.values()])
        for p in self.cfg.points:
            logger.info("point %d: mean held-out loss %.6f (%s)", p.index,
                        report.mean_loss(p.index), p.describe())
        logger.info("best point %d", report.best_point)
        return report

    def final_test(self, point):
        """Trains on the whole pool and evaluates the test languages."""
        if len(self.test) == 0:
            raise ConfigError("no test languages configured")
        m = self.train_point(point, None)
        return self.evaluate(m, self.test)


_worker_experiment = None


def init_worker(experiment):
    global _worker_experiment
    _worker_experiment = experiment


def run_task(task):
    point_index, fold = task
    exp = _worker_experiment
    return exp.run_fold(exp.cfg.points[point_index], fold)


def read_experiment(filename):
    return ExperimentConfig().get_reader().read(filename)


class CVReportWriter:
    """Writes <prefix>.cv.tsv, <prefix>.cv.summary.json and the per-relation
    breakdown of the best point."""

    HEADER = ["point", "fold", "language", "aggregate_loss",
              "binary_accuracy"]

    def __init__(self, prefix):
        self.prefix = prefix

    def write(self, report, cfg=None):
        util.write_tsv(self.prefix + ".cv.tsv", self.HEADER,
                       [[r.point, r.fold, r.language, r.loss,
                         r.binary_accuracy] for r in report.rows])
        body = {
            "points": [{"index": p.index, "settings": p.settings,
                        "mean_loss": report.mean_loss(p.index),
                        "mean_binary_accuracy":
                            report.mean_binary_accuracy(p.index)}
                       for p in report.points],
            "best_point": report.best_point,
        }
        if cfg is not None:
            body["config"] = cfg.to_dict()
        docio.DocumentWriter("cv-summary").write(
            self.prefix + ".cv.summary.json", body)
        writer = evaluation.EvalReportWriter(self.prefix + ".best")
        writer.write(report.reports[report.best_point], report.train_vectors)
