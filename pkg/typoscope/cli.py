# ---------------------------------------------------------------------------
# Typoscope
#
# cli.py
#
# Subcommands binding the toolkit into file-based pipelines.
#
# usage: typopredict SUBCOMMAND [OPTIONS] FILE...
# ---------------------------------------------------------------------------

from abc import ABC, abstractmethod
import logging
import yaml

from typoscope import const, corpus, evaluation, synth, typology, util
from typoscope.cmdline import CommandLineArguments
from typoscope.ecbaseline import ECModelReader, ECModelWriter, ec_train
from typoscope.exceptions import ConfigError, TyposcopeError, UsageError
from typoscope.features import hand
from typoscope.model import experiment, predictor


logger = logging.getLogger(__name__)

GLOBAL_FLAGS = ("--seed", "--scheme", "--eps")
GLOBAL_SWITCHES = ("--include-root", "--quiet", "--debug")


def print_usage():

    print("""\
 USAGE: typopredict SUBCOMMAND [options] FILE...

   stats TREEBANK                    directionality TSV of a treebank
   ec-train TREEBANK...              train the expected-count baseline
   ec-predict MODEL CORPUS           EC prediction of a tagged corpus
   featurize CORPUS                  hand-feature TSV of a tagged corpus
   train CONFIG.yaml                 train one grid point into a model file
   predict MODEL CORPUS              predict directionalities of a corpus
   evaluate PRED GOLD [PRED GOLD...] evaluation tables of predictions
   cv CONFIG.yaml                    cross-validate the configured grid
   synth SUBSTRATE                   permute a treebank toward superstrates

   --seed=N                  random seed (TYPOSCOPE_SEED, then 0)
   --scheme=strip|keep|pos-pair
                             relation scheme (strip)
   --include-root            count root edges as a relation
   --eps=E                   epsilon of the loss (0.1)
   --output=FILE             output file (stats, ec-train, ec-predict,
                             featurize, train, predict, synth)
   --output-prefix=P         output prefix (evaluate, cv)
   --window=W                EC window, an integer or inf (8)
   --max-len=N               longest sentence used by the EC baseline (40)
   --features=FILE.yaml      hand-feature settings (featurize)
   --point=K --fold=K        grid point and fold (train)
   --jobs=N                  parallel grid/fold jobs (cv)
   --final-test              train on the whole pool, evaluate test languages
   --rv=X --rn=X             verb/noun superstrate: treebank, TSV, self, none
   --verb-tags=T,... --noun-tags=T,...
                             head tags permuted under --rv / --rn
   --baseline=PRED,...       baseline predictions, one per PRED (evaluate)
   --train-gold=F,...        training treebanks or TSVs (evaluate breakdown)
   --quiet                   print warnings and errors only
   --debug                   print debug messages""")


def read_gold(path, scheme):
    """A directionality vector from a TSV or from a treebank."""
    if path.endswith(".tsv"):
        return typology.DirectionalityVectorReader(
            corpus.language_id_from_path(path)).read(path)
    return typology.directionality(corpus.read_treebank(path), scheme)


def output_name(value, default_value):
    return default_value if value is None else value


class AbstractCommandSettings(ABC):
    """Settings shared by every subcommand.

    Precedence: defaults, then the TYPOSCOPE_SEED environment variable,
    then command-line flags.
    """

    FLAGS = ()
    SWITCHES = ()
    MIN_INPUTS = 1
    MAX_INPUTS = 1

    def __init__(self):
        self.seed = util.resolve_seed()
        self.seed_given = False
        self.scheme = const.RelationSchemeMode.STRIP_SUBTYPES
        self.include_root = False
        self.eps = const.Defaults.EPS
        self.output = None
        self.inputs = []

    def process_cmdline_args(self, args):
        args.check_known(GLOBAL_FLAGS + GLOBAL_SWITCHES + self.FLAGS +
                         self.SWITCHES)

        if args.has_arg("--seed"):
            self.seed = args.get_integer_value("--seed", self.seed)
            self.seed_given = True
        self.scheme = args.get_choice_value("--scheme",
                                            const.RelationSchemeMode.ALL,
                                            self.scheme)
        self.include_root = args.has_arg("--include-root")
        self.eps = args.get_float_value("--eps", self.eps)
        if self.eps < 0:
            raise UsageError("--eps must be non-negative")
        self.output = args.get_value("--output")

        self.inputs = list(args.positional_args)
        if len(self.inputs) < self.MIN_INPUTS:
            raise UsageError("expected at least {0} input file(s)".format(
                self.MIN_INPUTS))
        if self.MAX_INPUTS is not None and \
                len(self.inputs) > self.MAX_INPUTS:
            raise UsageError("expected at most {0} input file(s)".format(
                self.MAX_INPUTS))

        self._process_cmdline_args(args)

    @abstractmethod
    def _process_cmdline_args(self, args):
        pass

    def relation_scheme(self):
        return typology.RelationScheme(self.scheme, self.include_root)

    def describe(self):
        return ", ".join("{0}={1}".format(k, v)
                         for k, v in sorted(vars(self).items()))


class StatsSettings(AbstractCommandSettings):

    FLAGS = ("--output",)

    def _process_cmdline_args(self, args):
        pass


class ECTrainSettings(AbstractCommandSettings):

    FLAGS = ("--output", "--window", "--max-len")
    MAX_INPUTS = None

    def __init__(self):
        super(ECTrainSettings, self).__init__()
        self.window = const.Defaults.EC_WINDOW
        self.max_len = const.Defaults.MAX_LEN

    def _process_cmdline_args(self, args):
        if args.has_arg("--window"):
            try:
                self.window = util.parse_window(args.get_value("--window"))
            except ValueError:
                raise UsageError("--window must be a non-negative integer or "
                                 "inf")
        self.max_len = args.get_integer_value("--max-len", self.max_len)


class ECPredictSettings(AbstractCommandSettings):

    FLAGS = ("--output",)
    MIN_INPUTS = 2
    MAX_INPUTS = 2

    def _process_cmdline_args(self, args):
        pass


class FeaturizeSettings(AbstractCommandSettings):

    FLAGS = ("--output", "--features")

    def __init__(self):
        super(FeaturizeSettings, self).__init__()
        self.features = hand.FeatureConfig()

    def _process_cmdline_args(self, args):
        filename = args.get_value("--features")
        if filename is not None:
            with open(filename, "rt", encoding="utf-8") as f:
                try:
                    d = yaml.load(f, Loader=yaml.SafeLoader) or dict()
                except yaml.YAMLError as ex:
                    raise ConfigError("{0}: {1}".format(filename, ex))
            if not isinstance(d, dict):
                raise ConfigError("{0}: feature settings must be a mapping"
                                  .format(filename))
            self.features = hand.FeatureConfig.from_dict(d)


class TrainSettings(AbstractCommandSettings):

    FLAGS = ("--output", "--point", "--fold")

    def __init__(self):
        super(TrainSettings, self).__init__()
        self.point = 0
        self.fold = None

    def _process_cmdline_args(self, args):
        self.point = args.get_integer_value("--point", self.point)
        self.fold = args.get_integer_value("--fold", self.fold)


class PredictSettings(AbstractCommandSettings):

    FLAGS = ("--output",)
    MIN_INPUTS = 2
    MAX_INPUTS = 2

    def _process_cmdline_args(self, args):
        pass


class EvaluateSettings(AbstractCommandSettings):

    FLAGS = ("--output-prefix", "--baseline", "--train-gold")
    MIN_INPUTS = 2
    MAX_INPUTS = None

    def __init__(self):
        super(EvaluateSettings, self).__init__()
        self.output_prefix = "evaluation"
        self.baselines = []
        self.train_gold = []

    def _process_cmdline_args(self, args):
        if len(self.inputs) % 2 != 0:
            raise UsageError("evaluate takes PRED GOLD pairs")
        self.output_prefix = args.get_string_value("--output-prefix",
                                                   self.output_prefix)
        self.baselines = [s for s in
                          args.get_string_value("--baseline", "").split(",")
                          if s]
        if self.baselines and len(self.baselines) != len(self.inputs) // 2:
            raise UsageError("--baseline needs one prediction per PRED")
        self.train_gold = [s for s in
                           args.get_string_value("--train-gold", "")
                           .split(",") if s]


class CVSettings(AbstractCommandSettings):

    FLAGS = ("--output-prefix", "--jobs")
    SWITCHES = ("--final-test",)

    def __init__(self):
        super(CVSettings, self).__init__()
        self.output_prefix = "cv"
        self.jobs = 1
        self.final_test = False

    def _process_cmdline_args(self, args):
        self.output_prefix = args.get_string_value("--output-prefix",
                                                   self.output_prefix)
        self.jobs = args.get_integer_value("--jobs", self.jobs)
        if self.jobs < 1:
            raise UsageError("--jobs must be positive")
        self.final_test = args.has_arg("--final-test")


class SynthSettings(AbstractCommandSettings):

    FLAGS = ("--output", "--rv", "--rn", "--verb-tags", "--noun-tags")

    def __init__(self):
        super(SynthSettings, self).__init__()
        self.rv = synth.NONE
        self.rn = synth.NONE
        self.verb_tags = synth.DEFAULT_VERB_TAGS
        self.noun_tags = synth.DEFAULT_NOUN_TAGS

    def _process_cmdline_args(self, args):
        self.rv = args.get_string_value("--rv", self.rv)
        self.rn = args.get_string_value("--rn", self.rn)
        if args.has_arg("--verb-tags"):
            self.verb_tags = frozenset(
                args.get_string_value("--verb-tags", "").split(","))
        if args.has_arg("--noun-tags"):
            self.noun_tags = frozenset(
                args.get_string_value("--noun-tags", "").split(","))


class AbstractCommand(ABC):

    name = None

    def __init__(self, settings):
        self.settings = settings

    def log_settings(self):
        logger.info("%s: %s", self.name, self.settings.describe())

    @abstractmethod
    def execute(self):
        pass


class StatsCommand(AbstractCommand):

    name = "stats"

    def __init__(self):
        super(StatsCommand, self).__init__(StatsSettings())

    def execute(self):
        s = self.settings
        tb = corpus.read_treebank(s.inputs[0])
        dv = typology.directionality(tb, s.relation_scheme())
        output = output_name(s.output, tb.language_id + ".directionality.tsv")
        dv.get_writer().write(output, dv)
        logger.info("%s: %d relations over %d sentences", tb.language_id,
                    len(dv), len(tb))
        return const.ExitCode.SUCCESS


class ECTrainCommand(AbstractCommand):

    name = "ec-train"

    def __init__(self):
        super(ECTrainCommand, self).__init__(ECTrainSettings())

    def execute(self):
        s = self.settings
        treebanks = [corpus.read_treebank(path) for path in s.inputs]
        m = ec_train(treebanks, s.relation_scheme(), s.window, s.max_len)
        ECModelWriter().write(output_name(s.output, "ec.model.json"), m)
        return const.ExitCode.SUCCESS


class ECPredictCommand(AbstractCommand):

    name = "ec-predict"

    def __init__(self):
        super(ECPredictCommand, self).__init__(ECPredictSettings())

    def execute(self):
        s = self.settings
        m = predictor.ECModelAdapter(ECModelReader().read(s.inputs[0]))
        c = corpus.read_tagged_corpus(s.inputs[1])
        pred = m.predict(c)
        predictor.PredictionWriter().write(
            output_name(s.output, c.language_id + ".prediction.json"), pred)
        return const.ExitCode.SUCCESS


class FeaturizeCommand(AbstractCommand):

    name = "featurize"

    def __init__(self):
        super(FeaturizeCommand, self).__init__(FeaturizeSettings())

    def execute(self):
        s = self.settings
        c = corpus.read_tagged_corpus(s.inputs[0])
        fv = hand.featurize_hand(c, s.features)
        hand.FeatureVectorWriter().write(
            output_name(s.output, c.language_id + ".features.tsv"), fv)
        logger.info("%s: %d features", c.language_id, len(fv))
        return const.ExitCode.SUCCESS


class AbstractExperimentCommand(AbstractCommand):

    def load_experiment(self):
        s = self.settings
        cfg = experiment.read_experiment(s.inputs[0])
        if s.seed_given:
            cfg.seed = s.seed
        logger.info("experiment seed %d", cfg.seed)
        return experiment.Experiment(cfg)


class TrainCommand(AbstractExperimentCommand):

    name = "train"

    def __init__(self):
        super(TrainCommand, self).__init__(TrainSettings())

    def execute(self):
        s = self.settings
        exp = self.load_experiment()
        if not 0 <= s.point < len(exp.cfg.points):
            raise UsageError("--point must be in [0, {0})".format(
                len(exp.cfg.points)))
        if s.fold is not None and not 0 <= s.fold < len(exp.plan):
            raise UsageError("--fold must be in [0, {0})".format(
                len(exp.plan)))
        m = exp.train_point(exp.cfg.points[s.point], s.fold)
        predictor.ModelWriter().write(output_name(s.output, "model.json"), m)
        logger.info("%s", predictor.model_summary(m))
        return const.ExitCode.SUCCESS


class PredictCommand(AbstractCommand):

    name = "predict"

    def __init__(self):
        super(PredictCommand, self).__init__(PredictSettings())

    def execute(self):
        s = self.settings
        m = predictor.ModelReader().read(s.inputs[0])
        c = corpus.read_tagged_corpus(s.inputs[1])
        pred = m.predict(c)
        predictor.PredictionWriter().write(
            output_name(s.output, c.language_id + ".prediction.json"), pred)
        return const.ExitCode.SUCCESS


class EvaluateCommand(AbstractCommand):

    name = "evaluate"

    def __init__(self):
        super(EvaluateCommand, self).__init__(EvaluateSettings())

    def reports(self, pred_files, golds):
        reader = predictor.PredictionReader()
        out = []
        for path, gold in zip(pred_files, golds):
            pred = reader.read(path)
            out.append(evaluation.aggregate_loss(
                pred.resolve(gold.relations()), gold, self.settings.eps))
        return out

    def execute(self):
        s = self.settings
        scheme = s.relation_scheme()
        golds = [read_gold(path, scheme) for path in s.inputs[1::2]]
        reports = self.reports(s.inputs[0::2], golds)
        train_vectors = [read_gold(path, scheme) for path in s.train_gold] \
            or None
        writer = evaluation.EvalReportWriter(s.output_prefix)
        writer.write(reports, train_vectors)
        if s.baselines:
            writer.write_comparison(reports, self.reports(s.baselines, golds),
                                    train_vectors or golds)
        for r in reports:
            logger.info("%s: aggregate loss %s, binary accuracy %s",
                        r.language_id, util.format_float(r.aggregate_loss),
                        util.format_float(r.binary_accuracy))
        logger.info("mean aggregate loss %s over %d languages",
                    util.format_float(evaluation.mean_loss(reports)),
                    len(reports))
        return const.ExitCode.SUCCESS


class CVCommand(AbstractExperimentCommand):

    name = "cv"

    def __init__(self):
        super(CVCommand, self).__init__(CVSettings())

    def execute(self):
        s = self.settings
        exp = self.load_experiment()
        report = exp.cross_validate(s.jobs)
        experiment.CVReportWriter(s.output_prefix).write(report, exp.cfg)
        if s.final_test:
            point = exp.cfg.points[report.best_point]
            reports = exp.final_test(point)
            evaluation.EvalReportWriter(s.output_prefix + ".test").write(
                reports, report.train_vectors)
            logger.info("final test of point %d: mean loss %s", point.index,
                        util.format_float(evaluation.mean_loss(reports)))
        return const.ExitCode.SUCCESS


class SynthCommand(AbstractCommand):

    name = "synth"

    def __init__(self):
        super(SynthCommand, self).__init__(SynthSettings())

    def superstrate(self, value, substrate, head_tags):
        """Returns (name, vector) for a --rv/--rn value."""
        scheme = self.settings.relation_scheme()
        if value == synth.NONE:
            return synth.NONE, None
        if value == synth.SELF:
            return synth.SELF, typology.directionality(substrate, scheme,
                                                       head_tags)
        if value.endswith(".tsv"):
            dv = read_gold(value, scheme)
            return dv.language_id, dv
        tb = corpus.read_treebank(value)
        return tb.language_id, typology.directionality(tb, scheme, head_tags)

    def execute(self):
        s = self.settings
        substrate = corpus.read_treebank(s.inputs[0])
        rv_name, rv = self.superstrate(s.rv, substrate, s.verb_tags)
        rn_name, rn = self.superstrate(s.rn, substrate, s.noun_tags)
        spec = synth.SynthSpec(substrate, rv, rn, s.seed, s.verb_tags,
                               s.noun_tags, s.relation_scheme(), rv_name,
                               rn_name)
        result = synth.permute(spec)
        report = synth.verify_synth(result, substrate)
        if not report.ok:
            for v in report.violations:
                logger.error("sentence %d: %s: %s", v.sentence, v.kind,
                             v.message)
            return const.ExitCode.DATA_ERROR
        result.write(output_name(
            s.output, result.treebank.language_id + ".conllu"))
        return const.ExitCode.SUCCESS


class CommandFactory:

    COMMANDS = {
        "stats": StatsCommand,
        "ec-train": ECTrainCommand,
        "ec-predict": ECPredictCommand,
        "featurize": FeaturizeCommand,
        "train": TrainCommand,
        "predict": PredictCommand,
        "evaluate": EvaluateCommand,
        "cv": CVCommand,
        "synth": SynthCommand,
    }

    @staticmethod
    def create_instance(name):
        if name not in CommandFactory.COMMANDS:
            raise UsageError("unknown subcommand {0}; choose from {1}".format(
                name, ", ".join(CommandFactory.COMMANDS)))
        return CommandFactory.COMMANDS[name]()


def value_options():
    opts = set(GLOBAL_FLAGS)
    for cls in CommandFactory.COMMANDS.values():
        opts.update(cls().settings.FLAGS)
    return opts


def run(argv):
    """Runs one subcommand and returns its exit status."""
    try:
        args = CommandLineArguments(argv, value_options())
        if args.subcommand is None:
            raise UsageError("no subcommand given")
        cmd = CommandFactory.create_instance(args.subcommand)
        cmd.settings.process_cmdline_args(args)
        cmd.log_settings()
        return cmd.execute()
    except UsageError as ex:
        logger.error("%s", ex)
        logger.error("run without arguments for usage")
        return const.ExitCode.USAGE_ERROR
    except (TyposcopeError, OSError) as ex:
        logger.error("%s", ex)
        return const.ExitCode.DATA_ERROR


def log_level_for(argv):
    if "--debug" in argv:
        return logging.DEBUG
    if "--quiet" in argv:
        return logging.WARNING
    return logging.INFO