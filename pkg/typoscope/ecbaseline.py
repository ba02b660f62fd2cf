# ---------------------------------------------------------------------------
# Typoscope
#
# ecbaseline.py
#
# The expected-count (EC) heuristic: tag-pair link probabilities learned
# from treebanks, turned into soft directionality votes on unparsed text.
# ---------------------------------------------------------------------------

import logging

from typoscope import const, docio, typology, util
from typoscope.exceptions import ConfigError


logger = logging.getLogger(__name__)


def window_pairs(n, w):
    """Yields 0-based position pairs (i, j), i < j, with j - i < w.

    :param w: window size; None is unbounded.
    """
    for i in range(n):
        hi = n if w is None else min(n, i + w)
        for j in range(i + 1, hi):
            yield i, j


class ECModel:

    def __init__(self, window, links, scheme=None, trained_languages=(),
                 max_len=const.Defaults.MAX_LEN):
        """Constructor

        :param window: positive window size w, or None for an unbounded one.
        :param links: mapping (t, t2) -> {relation: (right_prob, left_prob)}
                      where right_prob is p(t ->r t2 | t, t2) and left_prob is
                      p(t <-r t2 | t, t2).
        """
        self.window = window
        self.links = links
        self.scheme = scheme if scheme is not None \
            else typology.RelationScheme()
        self.trained_languages = list(trained_languages)
        self.max_len = max_len

    def __repr__(self):
        return "ECModel[w={0}, {1} tag pairs, {2} relations]".format(
            util.format_window(self.window), len(self.links),
            len(self.relations()))

    def relations(self):
        rels = set()
        for by_rel in self.links.values():
            rels.update(by_rel.keys())
        return sorted(rels)

    def right_prob(self, t, t2, r):
        return self.links.get((t, t2), {}).get(r, (0.0, 0.0))[0]

    def left_prob(self, t, t2, r):
        return self.links.get((t, t2), {}).get(r, (0.0, 0.0))[1]


def count_links(tb, scheme, w, max_len=None):
    """Counts tag pairs and linked tag pairs of one treebank.

    Returns (pair counts {(t, t2): n}, link counts {(t, t2, r, is_right): n}).
    """
    pair_counts = dict()
    link_counts = dict()
    for s in tb.sentences:
        n = len(s.tokens)
        if max_len is not None and n > max_len:
            continue
        tags = s.tags
        for i, j in window_pairs(n, w):
            key = (tags[i], tags[j])
            pair_counts[key] = pair_counts.get(key, 0) + 1
            left_tok = s.tokens[i]
            right_tok = s.tokens[j]
            if right_tok.head == i + 1:
                r = scheme.normalize(right_tok.deprel, tags[i], tags[j])
                k = key + (r, True)
                link_counts[k] = link_counts.get(k, 0) + 1
            elif left_tok.head == j + 1:
                r = scheme.normalize(left_tok.deprel, tags[j], tags[i])
                k = key + (r, False)
                link_counts[k] = link_counts.get(k, 0) + 1
    return pair_counts, link_counts


def ec_train(treebanks, scheme=None, w=const.Defaults.EC_WINDOW,
             max_len=const.Defaults.MAX_LEN):
    """Trains the tag-pair link probabilities.

    Each language L is weighted by s_L = 1 / (number of its windowed tag
    pairs), so every language carries the same total mass.
    """
    if scheme is None:
        scheme = typology.RelationScheme()
    if w is not None and w < 1:
        raise ConfigError("window must be positive, got {0}".format(w))
    if len(treebanks) == 0:
        raise ValueError("no treebanks to train on")
    pair_mass = dict()
    link_mass = dict()
    for tb in treebanks:
        pair_counts, link_counts = count_links(tb, scheme, w, max_len)
        total = sum(pair_counts.values())
        if total == 0:
            logger.warning("%s contributes no tag pairs to the EC model",
                           tb.language_id)
            continue
        s_l = 1.0 / total
        for key in sorted(pair_counts):
            pair_mass[key] = pair_mass.get(key, 0.0) + s_l * pair_counts[key]
        for key in sorted(link_counts):
            link_mass[key] = link_mass.get(key, 0.0) + s_l * link_counts[key]

    links = dict()
    for (t, t2, r, is_right), mass in sorted(link_mass.items()):
        p = mass / pair_mass[(t, t2)]
        by_rel = links.setdefault((t, t2), dict())
        right, left = by_rel.get(r, (0.0, 0.0))
        by_rel[r] = (p, left) if is_right else (right, p)

    m = ECModel(w, links, scheme, [tb.language_id for tb in treebanks],
                max_len)
    logger.debug("trained %s", m)
    return m


def expected_counts(m, c):
    """Returns ({r: ecnt(r->)}, {r: ecnt(r<-)}) over a tagged corpus."""
    right = dict()
    left = dict()
    for seq in c.real_tags():
        for i, j in window_pairs(len(seq), m.window):
            by_rel = m.links.get((seq[i], seq[j]))
            if by_rel is None:
                continue
            for r, (pr, pl) in by_rel.items():
                right[r] = right.get(r, 0.0) + pr
                left[r] = left.get(r, 0.0) + pl
    return right, left


def ec_predict(m, c, relations=None):
    """Predicts p(->|r) = ecnt(r->) / (ecnt(r->) + ecnt(r<-)).

    Relations without any expected count get 0.5.

    :param relations: relations to predict; defaults to those of the model.
    """
    if relations is None:
        relations = m.relations()
    right, left = expected_counts(m, c)
    pred = dict()
    for r in sorted(relations):
        a = right.get(r, 0.0)
        b = left.get(r, 0.0)
        pred[r] = a / (a + b) if a + b > 0 else 0.5
    return pred


class ECModelWriter:

    def make_body(self, m):
        links = []
        for (t, t2), by_rel in sorted(m.links.items()):
            for r, (pr, pl) in sorted(by_rel.items()):
                links.append([t, t2, r, pr, pl])
        return {
            "model_kind": const.ModelKind.EC,
            "window": util.format_window(m.window),
            "scheme": m.scheme.mode,
            "include_root": m.scheme.include_root,
            "max_len": m.max_len,
            "trained_languages": m.trained_languages,
            "links": links,
        }

    def write(self, filename, m):
        docio.DocumentWriter("model").write(filename, self.make_body(m))


class ECModelReader:

    def from_document(self, doc):
        links = dict()
        for t, t2, r, pr, pl in doc["links"]:
            links.setdefault((t, t2), dict())[r] = (float(pr), float(pl))
        scheme = typology.RelationScheme(doc.get("scheme",
                                         const.RelationSchemeMode.
                                         STRIP_SUBTYPES),
                                         bool(doc.get("include_root", False)))
        return ECModel(util.parse_window(doc["window"]), links, scheme,
                       doc.get("trained_languages", []),
                       doc.get("max_len", const.Defaults.MAX_LEN))

    def read(self, filename):
        doc = docio.DocumentReader(["model"]).read(filename)
        return self.from_document(doc)
