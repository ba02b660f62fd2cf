# ---------------------------------------------------------------------------
# Typoscope
#
# synth.py
#
# Synthetic training languages: the dependents of noun and verb heads of a
# substrate treebank are reordered toward the per-relation directionality
# of superstrate languages. Trees stay projective and the edge set is
# unchanged.
# ---------------------------------------------------------------------------

from collections import Counter
from dataclasses import dataclass, field
import logging
from typing import FrozenSet, List, Optional, Tuple

from typoscope import corpus, typology, util
from typoscope.exceptions import EmptyDataError


logger = logging.getLogger(__name__)

NONE = "none"
SELF = "self"

DEFAULT_VERB_TAGS = frozenset(["VERB"])
DEFAULT_NOUN_TAGS = frozenset(["NOUN"])


@dataclass(frozen=True)
class SynthSpec:
    """Settings of one permutation.

    A superstrate of None keeps substrate order under that head category.
    """
    substrate: corpus.Treebank
    superstrate_verb: Optional[typology.DirectionalityVector] = None
    superstrate_noun: Optional[typology.DirectionalityVector] = None
    seed: int = 0
    verb_tags: FrozenSet[str] = DEFAULT_VERB_TAGS
    noun_tags: FrozenSet[str] = DEFAULT_NOUN_TAGS
    scheme: typology.RelationScheme = field(
        default_factory=typology.RelationScheme)
    rv_name: str = NONE
    rn_name: str = NONE

    def superstrate_for(self, tag):
        if tag in self.verb_tags and self.superstrate_verb is not None:
            return self.superstrate_verb
        if tag in self.noun_tags and self.superstrate_noun is not None:
            return self.superstrate_noun
        return None


@dataclass
class SynthTreebank:
    treebank: corpus.Treebank
    provenance: dict
    # per sentence: substrate positions (1-based) in their new order
    orders: List[Tuple[int, ...]]
    permuted_tags: FrozenSet[str] = frozenset()
    nonprojective: int = 0

    def header_comments(self):
        return ["synth: substrate={0}, rv={1}, rn={2}, seed={3}".format(
            self.provenance["substrate"], self.provenance["rv"],
            self.provenance["rn"], self.provenance["seed"])]

    def write(self, filename):
        corpus.ConlluWriter(self.header_comments()).write(filename,
                                                          self.treebank)


def superstrate_side_probability(spec, substrate_dv, vector, relation):
    if relation in vector:
        return vector.p_right(relation)
    if substrate_dv is not None and relation in substrate_dv:
        return substrate_dv.p_right(relation)
    return 0.5


def linearize(sentence, spec, substrate_dv, rng):
    """Returns the substrate positions of a projective sentence in their
    new order."""
    n = len(sentence.tokens)
    kids = sentence.children()
    left = [None] * (n + 1)
    right = [None] * (n + 1)
    for h in range(1, n + 1):
        head = sentence.tokens[h - 1]
        vector = spec.superstrate_for(head.tag)
        if vector is None:
            left[h] = [d for d in kids[h] if d < h]
            right[h] = [d for d in kids[h] if d > h]
            continue
        left[h] = []
        right[h] = []
        for d in kids[h]:
            child = sentence.tokens[d - 1]
            r = spec.scheme.normalize(child.deprel, head.tag, child.tag)
            q = superstrate_side_probability(spec, substrate_dv, vector, r)
            if rng.random() < q:
                right[h].append(d)
            else:
                left[h].append(d)

    order = []
    stack = [(True, d) for d in reversed(kids[0])]
    while stack:
        is_node, h = stack.pop()
        if not is_node:
            order.append(h)
            continue
        stack.extend((True, d) for d in reversed(right[h]))
        stack.append((False, h))
        stack.extend((True, d) for d in reversed(left[h]))
    return tuple(order)


def reorder(sentence, order):
    new_pos = {old: k + 1 for k, old in enumerate(order)}
    new_pos[0] = 0
    tokens = []
    for k, old in enumerate(order):
        t = sentence.tokens[old - 1]
        tokens.append(corpus.Token(k + 1, t.tag, new_pos[t.head], t.deprel,
                                   t.form))
    return corpus.Sentence(tuple(tokens), sentence.sent_id)


def permute(spec):
    """Permutes the substrate toward the superstrates.

    Each sentence draws from its own random stream derived from (seed,
    sentence index). Non-projective sentences are copied unchanged.
    """
    substrate = spec.substrate
    try:
        substrate_dv = typology.directionality(substrate, spec.scheme)
    except EmptyDataError:
        substrate_dv = None
    permuted_tags = frozenset()
    if spec.superstrate_verb is not None:
        permuted_tags |= spec.verb_tags
    if spec.superstrate_noun is not None:
        permuted_tags |= spec.noun_tags

    sentences = []
    orders = []
    nonprojective = 0
    for k, s in enumerate(substrate.sentences):
        if not s.is_projective():
            nonprojective += 1
            sentences.append(s)
            orders.append(tuple(range(1, len(s) + 1)))
            continue
        rng = util.derive_rng(spec.seed, "synth", k)
        order = linearize(s, spec, substrate_dv, rng)
        orders.append(order)
        sentences.append(reorder(s, order))
    if nonprojective > 0:
        logger.warning("%s: copied %d non-projective sentences unchanged",
                       substrate.language_id, nonprojective)

    provenance = {"substrate": substrate.language_id, "rv": spec.rv_name,
                  "rn": spec.rn_name, "seed": spec.seed}
    language_id = synthetic_language_id(substrate.language_id, spec.rv_name,
                                        spec.rn_name)
    tb = corpus.Treebank(language_id, tuple(sentences), substrate.comments)
    logger.debug("permuted %s (rv=%s, rn=%s, seed=%d)", substrate.language_id,
                 spec.rv_name, spec.rn_name, spec.seed)
    return SynthTreebank(tb, provenance, orders, permuted_tags,
                         nonprojective)


def synthetic_language_id(substrate, rv, rn):
    if rv == NONE and rn == NONE:
        return substrate
    return "{0}~V={1}~N={2}".format(substrate, rv, rn)


@dataclass(frozen=True)
class Violation:
    sentence: int       # 0-based
    kind: str           # length, edge, projectivity, sibling-order
    message: str


class SynthReport:

    def __init__(self, violations=None):
        self.violations = violations if violations is not None else []

    @property
    def ok(self):
        return len(self.violations) == 0

    def of_kind(self, kind):
        return [v for v in self.violations if v.kind == kind]


def edge_multiset(sentence):
    edges = Counter()
    for t in sentence.tokens:
        head_tag = sentence.tokens[t.head - 1].tag if t.head > 0 else None
        edges[(head_tag, t.tag, t.deprel)] += 1
    return edges


def check_edges(k, syn, sub, order):
    if edge_multiset(syn) != edge_multiset(sub):
        return Violation(k, "edge", "edge multisets differ")
    old_of = {0: 0}
    for new, old in enumerate(order):
        old_of[new + 1] = old
    for t in syn.tokens:
        old = sub.tokens[old_of[t.index] - 1]
        if old_of.get(t.head) != old.head or old.deprel != t.deprel:
            return Violation(k, "edge", "token {0} has head {1}, expected "
                             "the image of {2}".format(t.index, t.head,
                                                       old.head))
    return None


def check_sibling_order(k, syn, sub, order, permuted_tags):
    new_pos = {old: new + 1 for new, old in enumerate(order)}
    kids = sub.children()
    for h in range(1, len(sub) + 1):
        deps = kids[h]
        if len(deps) == 0:
            continue
        if sub.tokens[h - 1].tag in permuted_tags:
            left = [d for d in deps if new_pos[d] < new_pos[h]]
            right = [d for d in deps if new_pos[d] > new_pos[h]]
            groups = [left, right]
        else:
            # head keeps its own place among its dependents
            groups = [sorted(deps + [h])]
        for g in groups:
            placed = [new_pos[d] for d in g]
            if placed != sorted(placed):
                return Violation(k, "sibling-order", "dependents of token "
                                 "{0} changed their relative order".format(h))
    return None


def verify_synth(s, substrate):
    """Checks a synthetic treebank against its substrate; report only."""
    report = SynthReport()
    if len(s.treebank.sentences) != len(substrate.sentences):
        report.violations.append(Violation(-1, "length", "{0} sentences, "
                                           "expected {1}".format(
                                               len(s.treebank.sentences),
                                               len(substrate.sentences))))
        return report
    for k, (syn, sub) in enumerate(zip(s.treebank.sentences,
                                       substrate.sentences)):
        order = s.orders[k] if k < len(s.orders) else \
            tuple(range(1, len(syn) + 1))
        if len(syn) != len(sub) or sorted(order) != list(range(1,
                                                               len(sub) + 1)):
            report.violations.append(Violation(k, "length", "sentence "
                                               "length changed"))
            continue
        v = check_edges(k, syn, sub, order)
        if v is not None:
            report.violations.append(v)
        if sub.is_projective() and not syn.is_projective():
            report.violations.append(Violation(k, "projectivity",
                                               "sentence is not projective"))
        v = check_sibling_order(k, syn, sub, order, s.permuted_tags)
        if v is not None:
            report.violations.append(v)
    if not report.ok:
        logger.warning("%s: %d synthetic-treebank violations",
                       s.treebank.language_id, len(report.violations))
    return report
