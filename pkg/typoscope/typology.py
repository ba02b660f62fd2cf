# ---------------------------------------------------------------------------
# Typoscope
#
# typology.py
#
# Gold directionality vectors, relation weights and cross-language
# aggregates.
# ---------------------------------------------------------------------------

from dataclasses import dataclass
import logging

from typoscope import const, util
from typoscope.exceptions import ConfigError, DataError, EmptyDataError


logger = logging.getLogger(__name__)


class RelationScheme:
    """Maps a raw DEPREL (and the tags at both ends) to a relation name."""

    def __init__(self, mode=const.RelationSchemeMode.STRIP_SUBTYPES,
                 include_root=False):
        if mode not in const.RelationSchemeMode.ALL:
            raise ConfigError("unknown relation scheme {0}".format(mode))
        self.mode = mode
        self.include_root = include_root

    def __repr__(self):
        return "RelationScheme({0}, include_root={1})".format(
            self.mode, self.include_root)

    def __eq__(self, other):
        return isinstance(other, RelationScheme) and \
            (self.mode, self.include_root) == (other.mode, other.include_root)

    def __hash__(self):
        return hash((self.mode, self.include_root))

    def normalize(self, deprel, head_tag, child_tag):
        if self.mode == const.RelationSchemeMode.POS_PAIR:
            return "({0},{1})".format(head_tag, child_tag)
        if self.mode == const.RelationSchemeMode.STRIP_SUBTYPES:
            return deprel.split(":", 1)[0]
        return deprel


@dataclass(frozen=True)
class DirectionalityEntry:
    p_right: float
    rel_freq: float
    count: int

    @property
    def right_count(self):
        return self.p_right * self.count


class DirectionalityVector:

    def __init__(self, language_id, entries):
        self.language_id = language_id
        self.entries = dict(sorted(entries.items()))

    def __repr__(self):
        return "DirectionalityVector[{0}, {1} relations]".format(
            self.language_id, len(self.entries))

    def __eq__(self, other):
        return isinstance(other, DirectionalityVector) and \
            self.language_id == other.language_id and \
            self.entries == other.entries

    def __len__(self):
        return len(self.entries)

    def __contains__(self, relation):
        return relation in self.entries

    def relations(self):
        return list(self.entries.keys())

    def p_right(self, relation):
        return self.entries[relation].p_right

    def rel_freq(self, relation):
        return self.entries[relation].rel_freq

    def count(self, relation):
        return self.entries[relation].count

    def probabilities(self):
        return {r: e.p_right for r, e in self.entries.items()}

    @staticmethod
    def from_counts(language_id, right_counts, counts):
        total = sum(counts.values())
        if total == 0:
            raise EmptyDataError("no edges in {0}".format(language_id))
        entries = dict()
        for r, n in counts.items():
            if n > 0:
                entries[r] = DirectionalityEntry(right_counts.get(r, 0) / n,
                                                 n / total, n)
        return DirectionalityVector(language_id, entries)

    @staticmethod
    def from_probabilities(language_id, probabilities, rel_freqs=None):
        """Builds a target vector directly, e.g. a randomized superstrate.

        Relation frequencies default to uniform; counts are nominal (1).
        """
        if len(probabilities) == 0:
            raise EmptyDataError("no relations for {0}".format(language_id))
        if rel_freqs is None:
            rel_freqs = {r: 1.0 for r in probabilities}
        total = sum(rel_freqs[r] for r in probabilities)
        return DirectionalityVector(
            language_id,
            {r: DirectionalityEntry(float(p), rel_freqs[r] / total, 1)
             for r, p in probabilities.items()})

    def merged(self, other):
        """Counts of the concatenation of the two underlying treebanks."""
        counts = dict()
        right = dict()
        for v in (self, other):
            for r, e in v.entries.items():
                counts[r] = counts.get(r, 0) + e.count
                right[r] = right.get(r, 0.0) + e.right_count
        return DirectionalityVector.from_counts(self.language_id, right,
                                                counts)

    def reversed(self):
        return DirectionalityVector(
            self.language_id,
            {r: DirectionalityEntry(1.0 - e.p_right, e.rel_freq, e.count)
             for r, e in self.entries.items()})

    def get_reader(self):
        return DirectionalityVectorReader(self.language_id)

    def get_writer(self):
        return DirectionalityVectorWriter()


class DirectionalityVectorWriter:

    HEADER = ["relation", "p_right", "rel_freq", "count"]

    def rows(self, dv):
        return [[r, e.p_right, e.rel_freq, e.count]
                for r, e in dv.entries.items()]

    def write(self, filename, dv):
        util.write_tsv(filename, self.HEADER, self.rows(dv))


class DirectionalityVectorReader:

    def __init__(self, language_id):
        self.language_id = language_id

    def read(self, filename):
        header, rows = util.read_tsv(filename)
        if header != DirectionalityVectorWriter.HEADER:
            raise DataError("{0}: expected columns {1}".format(
                filename, " ".join(DirectionalityVectorWriter.HEADER)))
        entries = dict()
        for k, row in enumerate(rows):
            try:
                entries[row[0]] = DirectionalityEntry(float(row[1]),
                                                      float(row[2]),
                                                      int(row[3]))
            except (IndexError, ValueError):
                raise DataError("{0}: malformed row {1}".format(filename,
                                                                k + 2))
        if len(entries) == 0:
            raise EmptyDataError("{0}: no relations".format(filename))
        return DirectionalityVector(self.language_id, entries)


def count_edges(tb, scheme, head_tags=None):
    """Returns (rightward counts, counts) per normalized relation."""
    right = dict()
    counts = dict()
    for s in tb.sentences:
        for t in s.tokens:
            if t.head == 0:
                if not scheme.include_root:
                    continue
                head_tag = const.BOUNDARY_TAG
            else:
                head_tag = s.tokens[t.head - 1].tag
            if head_tags is not None and head_tag not in head_tags:
                continue
            r = scheme.normalize(t.deprel, head_tag, t.tag)
            counts[r] = counts.get(r, 0) + 1
            if t.index > t.head:
                right[r] = right.get(r, 0) + 1
    return right, counts


def directionality(tb, scheme=None, head_tags=None):
    """Computes p*(->|r,L) and p*(r|L) from a treebank.

    :param head_tags: if given, only edges whose head tag is in this set
                      are counted.
    """
    if scheme is None:
        scheme = RelationScheme()
    if len(tb.sentences) == 0:
        raise EmptyDataError("empty treebank")
    right, counts = count_edges(tb, scheme, head_tags)
    if sum(counts.values()) == 0:
        raise EmptyDataError("no edges in {0}".format(tb.language_id))
    return DirectionalityVector.from_counts(tb.language_id, right, counts)


class InitStats:

    def __init__(self, pbar, weights):
        self.pbar = dict(sorted(pbar.items()))
        self.weights = weights

    def __repr__(self):
        return "InitStats[{0} relations]".format(len(self.pbar))

    def relations(self):
        return list(self.pbar.keys())


def init_stats(train):
    """Weighted mean directionality of each relation over languages."""
    totals = dict()
    for v in train:
        for r, e in v.entries.items():
            totals[r] = totals.get(r, 0.0) + e.rel_freq
    weights = dict()
    pbar = dict()
    for v in train:
        for r, e in v.entries.items():
            if totals[r] > 0:
                w = e.rel_freq / totals[r]
            else:
                # relation attested with zero weight everywhere
                w = 1.0 / sum(1 for u in train if r in u)
            weights[(r, v.language_id)] = w
            pbar[r] = pbar.get(r, 0.0) + w * e.p_right
    for r in pbar:
        pbar[r] = util.clip(pbar[r], 0.0, 1.0)
    return InitStats(pbar, weights)


def binary_label(p):
    return const.Direction.RIGHTWARD if p > 0.5 else const.Direction.LEFTWARD


def mean_relation_proportion(vectors):
    """Mean of p*(r|L) over languages, counting absent relations as 0."""
    if len(vectors) == 0:
        return dict()
    sums = dict()
    for v in vectors:
        for r, e in v.entries.items():
            sums[r] = sums.get(r, 0.0) + e.rel_freq
    return {r: s / len(vectors) for r, s in sorted(sums.items())}
