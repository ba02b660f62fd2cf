# ---------------------------------------------------------------------------
# Typoscope
#
# evaluation.py
#
# The epsilon-insensitive metric, binary direction accuracy and the
# per-relation / per-language report tables.
# ---------------------------------------------------------------------------

from dataclasses import dataclass
import logging
from typing import Dict, List

from typoscope import const, docio, typology, util
from typoscope.exceptions import DataError


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RelationLoss:
    loss: float         # rel_freq * eps_loss
    predicted: float
    gold: float
    rel_freq: float


@dataclass(frozen=True)
class ScatterRow:
    relation: str
    language: str
    gold: float
    predicted: float
    weight: float


@dataclass
class EvalReport:
    language_id: str
    eps: float
    aggregate_loss: float
    per_relation: Dict[str, RelationLoss]
    binary_accuracy: float
    binary_relations: int
    scatter_rows: List[ScatterRow]

    def __repr__(self):
        return "EvalReport[{0}, loss {1:.6f}, binary {2:.4f}]".format(
            self.language_id, self.aggregate_loss, self.binary_accuracy)


def eps_loss(p_hat, p_star, eps):
    return max(abs(p_hat - p_star) - eps, 0.0)


def top_relations(gold, top_k):
    """The top_k relations by gold frequency, ties broken lexicographically."""
    ranked = sorted(gold.entries.items(), key=lambda kv: (-kv[1].rel_freq,
                                                          kv[0]))
    return [r for r, e in ranked[:top_k]]


def binary_accuracy(pred, gold, top_k=const.Defaults.BINARY_TOP_K):
    relations = top_relations(gold, top_k)
    if len(relations) < top_k:
        logger.warning("%s has only %d relations; binary accuracy uses all "
                       "of them instead of %d", gold.language_id,
                       len(relations), top_k)
    if len(relations) == 0:
        return 0.0
    agree = 0
    for r in relations:
        if r not in pred:
            raise DataError("no prediction for relation {0}".format(r))
        if typology.binary_label(pred[r]) == \
                typology.binary_label(gold.p_right(r)):
            agree += 1
    return agree / len(relations)


def aggregate_loss(pred, gold, eps=const.Defaults.EPS,
                   top_k=const.Defaults.BINARY_TOP_K):
    """Frequency-weighted epsilon-insensitive loss of one language.

    :param pred: mapping relation -> predicted directionality; must cover
                 every relation of gold.
    :param gold: DirectionalityVector.
    """
    per_relation = dict()
    rows = []
    total = 0.0
    for r, e in gold.entries.items():
        if r not in pred:
            raise DataError("no prediction for relation {0}".format(r))
        p_hat = float(pred[r])
        contribution = e.rel_freq * eps_loss(p_hat, e.p_right, eps)
        per_relation[r] = RelationLoss(contribution, p_hat, e.p_right,
                                       e.rel_freq)
        rows.append(ScatterRow(r, gold.language_id, e.p_right, p_hat,
                               e.rel_freq))
        total += contribution
    n_binary = min(top_k, len(gold.entries))
    report = EvalReport(gold.language_id, eps, total, per_relation,
                        binary_accuracy(pred, gold, top_k), n_binary, rows)
    logger.debug("%s", report)
    return report


def mean_loss(reports):
    if len(reports) == 0:
        return float("nan")
    return sum(r.aggregate_loss for r in reports) / len(reports)


def mean_binary_accuracy(reports):
    if len(reports) == 0:
        return float("nan")
    return sum(r.binary_accuracy for r in reports) / len(reports)


@dataclass(frozen=True)
class RelationBreakdownRow:
    relation: str
    mean_proportion: float  # over training languages
    weighted_loss: float    # over held-out languages, weighted by w_L(r)
    languages: int


def relation_breakdown(reports, train_vectors):
    """Per-relation cross-validation loss.

    The loss of relation r is the w_L(r)-weighted average over the held-out
    languages containing r of eps_loss(p_hat, p*), i.e. the contribution
    divided back by p*(r|L).
    """
    proportion = typology.mean_relation_proportion(train_vectors)
    freq_sums = dict()
    for rep in reports:
        for r, rl in rep.per_relation.items():
            freq_sums[r] = freq_sums.get(r, 0.0) + rl.rel_freq
    losses = dict()
    counts = dict()
    for rep in reports:
        for r, rl in rep.per_relation.items():
            if freq_sums[r] > 0:
                w = rl.rel_freq / freq_sums[r]
            else:
                w = 0.0
            unweighted = eps_loss(rl.predicted, rl.gold, rep.eps)
            losses[r] = losses.get(r, 0.0) + w * unweighted
            counts[r] = counts.get(r, 0) + 1
    return [RelationBreakdownRow(r, proportion.get(r, 0.0), losses[r],
                                 counts[r])
            for r in sorted(losses)]


@dataclass(frozen=True)
class BaselineComparisonRow:
    relation: str
    mean_proportion: float
    baseline_loss: float
    model_loss: float


def baseline_comparison(model_reports, baseline_reports, train_vectors):
    """Per-relation loss of a model against a baseline on the same
    held-out languages. Relations below the diagonal beat the baseline."""
    model_rows = {r.relation: r
                  for r in relation_breakdown(model_reports, train_vectors)}
    base_rows = {r.relation: r
                 for r in relation_breakdown(baseline_reports, train_vectors)}
    return [BaselineComparisonRow(r, model_rows[r].mean_proportion,
                                  base_rows[r].weighted_loss,
                                  model_rows[r].weighted_loss)
            for r in sorted(model_rows) if r in base_rows]


def frequent_relations(reports, train_vectors=None,
                       top_k=const.Defaults.BINARY_TOP_K):
    """The top_k relations by mean proportion in the training languages
    (or, without them, in the evaluated languages)."""
    if train_vectors:
        proportion = typology.mean_relation_proportion(train_vectors)
    else:
        sums = dict()
        for rep in reports:
            for r, rl in rep.per_relation.items():
                sums[r] = sums.get(r, 0.0) + rl.rel_freq
        proportion = sums
    ranked = sorted(proportion.items(), key=lambda kv: (-kv[1], kv[0]))
    return [r for r, v in ranked[:top_k]]


def is_correct_side(rl):
    return typology.binary_label(rl.predicted) == \
        typology.binary_label(rl.gold)


def binary_by_relation(reports, train_vectors=None,
                       top_k=const.Defaults.BINARY_TOP_K):
    """Accuracy of the binary direction per frequent relation, an equal
    average over the languages in which the relation occurs."""
    rows = []
    for r in frequent_relations(reports, train_vectors, top_k):
        hits = [is_correct_side(rep.per_relation[r]) for rep in reports
                if r in rep.per_relation]
        if len(hits) > 0:
            rows.append((r, sum(hits) / len(hits), len(hits)))
    return rows


def binary_by_language(reports, train_vectors=None,
                       top_k=const.Defaults.BINARY_TOP_K):
    """Accuracy of the binary direction per language, an equal average over
    the frequent relations it contains."""
    relations = frequent_relations(reports, train_vectors, top_k)
    rows = []
    for rep in reports:
        hits = [is_correct_side(rep.per_relation[r]) for r in relations
                if r in rep.per_relation]
        if len(hits) > 0:
            rows.append((rep.language_id, sum(hits) / len(hits), len(hits)))
    return rows


class EvalReportWriter:
    """Writes the TSV tables and the summary document of a set of reports.

    Columns:
      <prefix>.scatter.tsv    relation language gold predicted weight
      <prefix>.relations.tsv  language relation rel_freq gold predicted loss
      <prefix>.summary.json   kind "evaluation"
    """

    SCATTER_HEADER = ["relation", "language", "gold", "predicted", "weight"]
    RELATIONS_HEADER = ["language", "relation", "rel_freq", "gold",
                        "predicted", "loss"]
    BREAKDOWN_HEADER = ["relation", "mean_proportion", "weighted_loss",
                        "languages"]
    COMPARISON_HEADER = ["relation", "mean_proportion", "baseline_loss",
                         "model_loss"]

    def __init__(self, prefix):
        self.prefix = prefix

    def write_scatter(self, reports):
        rows = []
        for rep in reports:
            rows.extend([s.relation, s.language, s.gold, s.predicted,
                         s.weight] for s in rep.scatter_rows)
        util.write_tsv(self.prefix + ".scatter.tsv", self.SCATTER_HEADER,
                       rows)

    def write_relations(self, reports):
        rows = []
        for rep in reports:
            rows.extend([rep.language_id, r, rl.rel_freq, rl.gold,
                         rl.predicted, rl.loss]
                        for r, rl in rep.per_relation.items())
        util.write_tsv(self.prefix + ".relations.tsv", self.RELATIONS_HEADER,
                       rows)

    def write_breakdown(self, reports, train_vectors):
        rows = [[b.relation, b.mean_proportion, b.weighted_loss, b.languages]
                for b in relation_breakdown(reports, train_vectors)]
        util.write_tsv(self.prefix + ".breakdown.tsv", self.BREAKDOWN_HEADER,
                       rows)

    def write_comparison(self, model_reports, baseline_reports,
                         train_vectors):
        rows = [[c.relation, c.mean_proportion, c.baseline_loss, c.model_loss]
                for c in baseline_comparison(model_reports, baseline_reports,
                                             train_vectors)]
        util.write_tsv(self.prefix + ".comparison.tsv",
                       self.COMPARISON_HEADER, rows)

    def summary_body(self, reports, train_vectors=None):
        return {
            "eps": reports[0].eps if reports else const.Defaults.EPS,
            "mean_loss": mean_loss(reports) if reports else None,
            "mean_binary_accuracy":
                mean_binary_accuracy(reports) if reports else None,
            "languages": [
                {"language": rep.language_id,
                 "aggregate_loss": rep.aggregate_loss,
                 "binary_accuracy": rep.binary_accuracy,
                 "binary_relations": rep.binary_relations}
                for rep in reports],
            "binary_by_relation": [
                {"relation": r, "accuracy": a, "languages": n}
                for r, a, n in binary_by_relation(reports, train_vectors)],
            "binary_by_language": [
                {"language": lang, "accuracy": a, "relations": n}
                for lang, a, n in binary_by_language(reports,
                                                     train_vectors)],
        }

    def write_summary(self, reports, train_vectors=None):
        docio.DocumentWriter("evaluation").write(
            self.prefix + ".summary.json",
            self.summary_body(reports, train_vectors))

    def write(self, reports, train_vectors=None):
        self.write_scatter(reports)
        self.write_relations(reports)
        self.write_summary(reports, train_vectors)
        if train_vectors is not None:
            self.write_breakdown(reports, train_vectors)
