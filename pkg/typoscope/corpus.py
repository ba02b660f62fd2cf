# ---------------------------------------------------------------------------
# Typoscope
#
# corpus.py
#
# CoNLL-U treebanks and their unparsed POS-sequence view.
# ---------------------------------------------------------------------------

from dataclasses import dataclass, field
import logging
import os
from typing import Optional, Tuple

from typoscope import const
from typoscope.exceptions import ConfigError, ConllParseError, \
                                 EmptyDataError, TreeStructureError


logger = logging.getLogger(__name__)

CONLLU_COLUMNS = 10


@dataclass(frozen=True)
class Token:
    index: int
    tag: str
    head: int
    deprel: str
    form: str = "_"


@dataclass(frozen=True)
class Sentence:
    tokens: Tuple[Token, ...]
    sent_id: Optional[str] = None

    def __len__(self):
        return len(self.tokens)

    @property
    def tags(self):
        return tuple(t.tag for t in self.tokens)

    def children(self):
        """Returns a list indexed by position (0 = virtual root) of the
        dependents of each position in left-to-right order."""
        kids = [[] for _ in range(len(self.tokens) + 1)]
        for t in self.tokens:
            kids[t.head].append(t.index)
        return kids

    def is_projective(self):
        n = len(self.tokens)
        kids = self.children()
        lo = list(range(n + 1))
        hi = list(range(n + 1))
        size = [1] * (n + 1)
        # children-before-parent order
        order = []
        stack = [0]
        while stack:
            k = stack.pop()
            order.append(k)
            stack.extend(kids[k])
        for k in reversed(order):
            for c in kids[k]:
                lo[k] = min(lo[k], lo[c])
                hi[k] = max(hi[k], hi[c])
                size[k] += size[c]
        for k in range(1, n + 1):
            if hi[k] - lo[k] + 1 != size[k]:
                return False
        return True

    def reversed(self):
        """Mirror image: position i moves to n + 1 - i."""
        n = len(self.tokens)

        def flip(i):
            return 0 if i == 0 else n + 1 - i

        tokens = tuple(Token(flip(t.index), t.tag, flip(t.head), t.deprel,
                             t.form)
                       for t in reversed(self.tokens))
        return Sentence(tokens, self.sent_id)


@dataclass(frozen=True)
class Treebank:
    language_id: str
    sentences: Tuple[Sentence, ...]
    comments: Tuple[str, ...] = field(default=(), compare=False)

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def token_count(self):
        return sum(len(s) for s in self.sentences)

    def reversed(self):
        return Treebank(self.language_id,
                        tuple(s.reversed() for s in self.sentences),
                        self.comments)

    def concatenated(self, other):
        return Treebank(self.language_id, self.sentences + other.sentences,
                        self.comments)


@dataclass(frozen=True)
class TaggedCorpus:
    """The unparsed view: boundary-augmented tag sequences only."""
    language_id: str
    tag_sequences: Tuple[Tuple[str, ...], ...]

    def __post_init__(self):
        for seq in self.tag_sequences:
            if len(seq) < 2 or seq[0] != const.BOUNDARY_TAG \
                    or seq[-1] != const.BOUNDARY_TAG \
                    or const.BOUNDARY_TAG in seq[1:-1]:
                raise ValueError("tag sequence {0} is not boundary-augmented"
                                 .format(" ".join(seq)))

    def __len__(self):
        return len(self.tag_sequences)

    def __iter__(self):
        return iter(self.tag_sequences)

    @staticmethod
    def from_tag_lists(language_id, tag_lists):
        b = const.BOUNDARY_TAG
        return TaggedCorpus(language_id,
                            tuple((b,) + tuple(tags) + (b,)
                                  for tags in tag_lists))

    def real_tags(self):
        """Yields the tag lists without boundaries."""
        for seq in self.tag_sequences:
            yield seq[1:-1]

    def tag_inventory(self):
        tags = set()
        for seq in self.real_tags():
            tags.update(seq)
        return sorted(tags)


def check_tag(tag, line_number):
    if len(tag) == 0 or tag.split() != [tag]:
        raise ConllParseError("malformed POS tag '{0}'".format(tag),
                              line_number)
    if tag == const.BOUNDARY_TAG:
        raise ConllParseError("POS tag '{0}' is reserved for sentence "
                              "boundaries".format(tag), line_number)


def check_tree(tokens, name):
    n = len(tokens)
    roots = 0
    for t in tokens:
        if t.head < 0 or t.head > n:
            raise TreeStructureError("token {0} has head {1} outside [0, {2}]"
                                     .format(t.index, t.head, n), name)
        if t.head == t.index:
            raise TreeStructureError("token {0} is its own head"
                                     .format(t.index), name)
        if t.head == 0:
            roots += 1
    if roots != 1:
        raise TreeStructureError("expected exactly one root, found {0}"
                                 .format(roots), name)
    heads = [0] + [t.head for t in tokens]
    state = [0] * (n + 1)   # 0 unvisited, 1 on path, 2 reaches the root
    state[0] = 2
    for start in range(1, n + 1):
        path = []
        k = start
        while state[k] == 0:
            state[k] = 1
            path.append(k)
            k = heads[k]
        if state[k] == 1:
            raise TreeStructureError("cyclic head references through token "
                                     "{0}".format(k), name)
        for p in path:
            state[p] = 2


class ConlluReader:

    def __init__(self, language_id="und"):
        self.language_id = language_id

    def parse(self, text):
        sentences = []
        comments = []
        tokens = []
        sent_id = None
        first_line = None
        header = True

        def close():
            if len(tokens) > 0:
                name = sent_id if sent_id is not None else \
                    "#{0} (line {1})".format(len(sentences) + 1, first_line)
                check_tree(tokens, name)
                sentences.append(Sentence(tuple(tokens), sent_id))

        for k, raw in enumerate(text.split("\n")):
            line_number = k + 1
            ln = raw.rstrip("\r")
            if len(ln.strip()) == 0:
                close()
                tokens = []
                sent_id = None
                first_line = None
                continue
            if ln.startswith("#"):
                body = ln[1:].strip()
                if body.startswith("sent_id"):
                    sent_id = body.split("=", 1)[1].strip() \
                        if "=" in body else body[len("sent_id"):].strip()
                elif header and len(sentences) == 0 and len(tokens) == 0 \
                        and sent_id is None:
                    comments.append(body)
                continue
            header = False
            fields = ln.split("\t")
            if len(fields) != CONLLU_COLUMNS:
                raise ConllParseError("expected {0} tab-separated columns, "
                                      "got {1}".format(CONLLU_COLUMNS,
                                                       len(fields)),
                                      line_number)
            token_id = fields[0]
            if "-" in token_id or "." in token_id:
                continue    # multiword range or empty node
            try:
                index = int(token_id)
            except ValueError:
                raise ConllParseError("non-integer token ID '{0}'"
                                      .format(token_id), line_number)
            if index != len(tokens) + 1:
                raise ConllParseError("token ID {0} out of sequence"
                                      .format(index), line_number)
            try:
                head = int(fields[6])
            except ValueError:
                raise ConllParseError("non-integer head '{0}'"
                                      .format(fields[6]), line_number)
            tag = fields[3]
            check_tag(tag, line_number)
            if first_line is None:
                first_line = line_number
            tokens.append(Token(index, tag, head, fields[7], fields[1]))
        close()

        if len(sentences) == 0:
            raise EmptyDataError("empty treebank")
        logger.debug("parsed %d sentences for language %s", len(sentences),
                     self.language_id)
        return Treebank(self.language_id, tuple(sentences), tuple(comments))

    def read(self, filename):
        with open(filename, "rt", encoding="utf-8") as f:
            return self.parse(f.read())


class ConlluWriter:

    def __init__(self, header_comments=()):
        self.header_comments = tuple(header_comments)

    def format(self, tb):
        lines = ["# " + c for c in self.header_comments]
        for s in tb.sentences:
            if s.sent_id is not None:
                lines.append("# sent_id = " + s.sent_id)
            for t in s.tokens:
                lines.append("\t".join([str(t.index), t.form, "_", t.tag, "_",
                                        "_", str(t.head), t.deprel, "_",
                                        "_"]))
            lines.append("")
        return "\n".join(lines) + "\n"

    def write(self, filename, tb):
        logger.info("Creating file %s", filename)
        with open(filename, "wt", encoding="utf-8", newline="\n") as f:
            f.write(self.format(tb))


def parse_conllu(text, language_id="und"):
    return ConlluReader(language_id).parse(text)


def format_conllu(tb, header_comments=()):
    return ConlluWriter(header_comments).format(tb)


def language_id_from_path(path):
    name = os.path.basename(path)
    for ext in (".conllu", ".txt", ".tags", ".tsv"):
        if name.endswith(ext):
            return name[:-len(ext)]
    return name


def read_treebank(path, language_id=None):
    if language_id is None:
        language_id = language_id_from_path(path)
    return ConlluReader(language_id).read(path)


def to_tagged_corpus(tb):
    return TaggedCorpus.from_tag_lists(tb.language_id,
                                       [s.tags for s in tb.sentences])


def looks_like_conllu(text):
    for ln in text.split("\n"):
        ln = ln.rstrip("\r")
        if len(ln.strip()) == 0 or ln.startswith("#"):
            continue
        return len(ln.split("\t")) == CONLLU_COLUMNS
    return False


def read_tagged_corpus(path, language_id=None):
    """Reads a pre-tagged corpus: CoNLL-U (trees ignored) or one
    whitespace-separated tag sequence per line."""
    if language_id is None:
        language_id = language_id_from_path(path)
    with open(path, "rt", encoding="utf-8") as f:
        text = f.read()
    if path.endswith(".conllu") or looks_like_conllu(text):
        return to_tagged_corpus(ConlluReader(language_id).parse(text))
    tag_lists = []
    for k, ln in enumerate(text.split("\n")):
        tags = ln.split()
        if len(tags) == 0:
            continue
        for tag in tags:
            check_tag(tag, k + 1)
        tag_lists.append(tags)
    if len(tag_lists) == 0:
        raise EmptyDataError("empty corpus {0}".format(path))
    return TaggedCorpus.from_tag_lists(language_id, tag_lists)


def length_filter(c, max_len):
    if max_len < 1:
        raise ConfigError("max_len must be at least 1, got {0}"
                         .format(max_len))
    kept = tuple(seq for seq in c.tag_sequences if len(seq) - 2 <= max_len)
    logger.debug("length filter %d kept %d of %d sentences", max_len,
                 len(kept), len(c.tag_sequences))
    return TaggedCorpus(c.language_id, kept)


def corpus_reversed(c):
    return TaggedCorpus(c.language_id,
                        tuple(tuple(reversed(seq)) for seq in c.tag_sequences))


def add_tag_noise(c, rate, tagset, rng):
    """Replaces each real tag, with probability rate, by a different tag
    drawn uniformly from tagset."""
    tagset = sorted(set(tagset))
    noisy = []
    for tags in c.real_tags():
        out = []
        for tag in tags:
            if rng.random() < rate:
                others = [t for t in tagset if t != tag]
                if len(others) > 0:
                    tag = others[int(rng.integers(len(others)))]
            out.append(tag)
        noisy.append(out)
    return TaggedCorpus.from_tag_lists(c.language_id, noisy)


def resample(c, rng, mode, fraction=0.5):
    """Bootstrap-resamples or subsamples the sentences of a corpus."""
    n = len(c.tag_sequences)
    if mode == const.Resampling.NONE or n == 0:
        return c
    if mode == const.Resampling.BOOTSTRAP:
        picks = rng.integers(n, size=n)
    elif mode == const.Resampling.SUBSAMPLE:
        m = max(1, int(round(fraction * n)))
        picks = sorted(rng.choice(n, size=m, replace=False))
    else:
        raise ConfigError("unknown resampling mode {0}".format(mode))
    return TaggedCorpus(c.language_id,
                        tuple(c.tag_sequences[int(k)] for k in picks))
