# ---------------------------------------------------------------------------
# Typoscope
#
# test_synth.py
#
# Performs unit tests on functions and class methods declared in synth.py.
# ---------------------------------------------------------------------------

import math
import numpy
import pytest

from typoscope import corpus, synth, typology


@pytest.fixture
def fixture_tb():
    return corpus.read_treebank("data/fixture.conllu")


@pytest.fixture
def big_tb(fixture_tb):
    tb = fixture_tb
    for k in range(19):
        tb = tb.concatenated(fixture_tb)
    return tb


def projective_part(tb):
    return corpus.Treebank(tb.language_id, tuple(
        s for s in tb.sentences if s.is_projective()))


def verb_target():
    return typology.DirectionalityVector.from_probabilities(
        "sup", {"nsubj": 0.8, "obj": 0.3, "advmod": 0.5})


def test_SynthSpec_superstrate_for():
    v = verb_target()
    spec = synth.SynthSpec(None, v, None)

    assert spec.superstrate_for("VERB") is v
    assert spec.superstrate_for("NOUN") is None
    assert spec.superstrate_for("ADJ") is None


def test_superstrate_side_probability():
    v = verb_target()
    sub = typology.DirectionalityVector.from_probabilities(
        "sub", {"mark": 0.1})

    assert synth.superstrate_side_probability(None, sub, v, "nsubj") == 0.8
    assert synth.superstrate_side_probability(None, sub, v, "mark") == 0.1
    assert synth.superstrate_side_probability(None, None, v, "cc") == 0.5


def test_permute_identity(fixture_tb):
    s = synth.permute(synth.SynthSpec(fixture_tb))

    assert s.treebank.sentences == fixture_tb.sentences
    assert s.treebank.language_id == "fixture"
    assert s.permuted_tags == frozenset()
    assert synth.verify_synth(s, fixture_tb).ok


def test_permute_extreme_target(fixture_tb):
    nouns = typology.DirectionalityVector.from_probabilities(
        "sup", {"det": 1.0, "amod": 1.0})
    s = synth.permute(synth.SynthSpec(fixture_tb, None, nouns, 3,
                                      rn_name="sup"))
    dv = typology.directionality(s.treebank)
    before = typology.directionality(fixture_tb)
    moved = typology.directionality(projective_part(s.treebank))

    assert s.nonprojective == 3
    assert moved.p_right("det") == 1.0
    assert moved.p_right("amod") == 1.0
    # non-projective sentences keep their leftward det
    assert dv.p_right("det") == pytest.approx(396.0 / 399.0, abs=1e-12)
    # verb-headed relations keep their order
    assert dv.p_right("nsubj") == before.p_right("nsubj")
    assert dv.p_right("obj") == before.p_right("obj")
    assert s.treebank.language_id == "fixture~V=none~N=sup"
    assert synth.verify_synth(s, fixture_tb).ok


def test_permute_converges_to_target(big_tb):
    s = synth.permute(synth.SynthSpec(big_tb, verb_target(), None, 11,
                                      rv_name="sup"))
    dv = typology.directionality(s.treebank, None, {"VERB"})

    for r in ("nsubj", "obj"):
        n = dv.count(r)
        q = verb_target().p_right(r)
        assert n >= 2000
        se = math.sqrt(q * (1.0 - q) / n)
        assert abs(dv.p_right(r) - q) <= 3.0 * se


def test_permute_keeps_edges(big_tb):
    nouns = typology.DirectionalityVector.from_probabilities(
        "sup", {"det": 0.5, "amod": 0.5, "nmod": 0.5, "case": 0.5})
    s = synth.permute(synth.SynthSpec(big_tb, verb_target(), nouns, 5,
                                      rv_name="a", rn_name="b"))
    report = synth.verify_synth(s, big_tb)

    assert len(s.treebank.sentences) == 20 * 263
    assert report.ok
    assert report.violations == []
    assert s.nonprojective == 20 * 3
    for x, y in zip(s.treebank.sentences, big_tb.sentences):
        assert x.is_projective() or x == y


def test_permute_is_seeded(fixture_tb):
    spec = synth.SynthSpec(fixture_tb, verb_target(), None, 7)
    a = synth.permute(spec)
    b = synth.permute(spec)
    c = synth.permute(synth.SynthSpec(fixture_tb, verb_target(), None, 8))

    assert a.treebank == b.treebank
    assert a.orders == b.orders
    assert a.orders != c.orders


def test_permute_nonprojective():
    tb = corpus.read_treebank("data/nonprojective.conllu")
    s = synth.permute(synth.SynthSpec(tb, verb_target(), verb_target(), 1))

    assert s.nonprojective == 1
    assert s.treebank.sentences == tb.sentences


def test_linearize():
    tb = corpus.read_treebank("data/two_token.conllu")
    nouns = typology.DirectionalityVector.from_probabilities("x",
                                                             {"det": 1.0})
    spec = synth.SynthSpec(tb, None, nouns)

    order = synth.linearize(tb.sentences[0], spec, None,
                            numpy.random.default_rng(0))
    assert order == (2, 1)


def test_reorder():
    tb = corpus.read_treebank("data/two_token.conllu")
    s = synth.reorder(tb.sentences[0], (2, 1))

    assert s.tags == ("NOUN", "DET")
    assert s.tokens[0].head == 0
    assert s.tokens[1].head == 1
    assert s.tokens[1].deprel == "det"


def test_synthetic_language_id():
    assert synth.synthetic_language_id("en", "none", "none") == "en"
    assert synth.synthetic_language_id("en", "ja", "self") == \
        "en~V=ja~N=self"


def test_SynthTreebank_write(tmp_path, fixture_tb):
    s = synth.permute(synth.SynthSpec(fixture_tb, verb_target(), None, 2,
                                      rv_name="sup"))
    filename = str(tmp_path / "out.conllu")
    s.write(filename)

    with open(filename) as f:
        first = f.readline()
    assert first == "# synth: substrate=fixture, rv=sup, rn=none, seed=2\n"
    again = corpus.read_treebank(filename, s.treebank.language_id)
    assert again == s.treebank


def test_verify_synth_detects_violations(fixture_tb):
    sub = corpus.Treebank("x", fixture_tb.sentences[:1])

    # det moved after its (unpermuted) noun head
    order = (1, 2, 3, 5, 4)
    moved = synth.SynthTreebank(
        corpus.Treebank("x", (synth.reorder(sub.sentences[0], order),)),
        {}, [order])
    report = synth.verify_synth(moved, sub)
    assert not report.ok
    assert len(report.of_kind("sibling-order")) == 1

    # a relabeled edge
    s = sub.sentences[0]
    tokens = list(s.tokens)
    tokens[0] = corpus.Token(1, "DET", 2, "amod", "the")
    relabeled = synth.SynthTreebank(
        corpus.Treebank("x", (corpus.Sentence(tuple(tokens)),)), {},
        [(1, 2, 3, 4, 5)])
    assert len(synth.verify_synth(relabeled, sub).of_kind("edge")) == 1

    short = synth.SynthTreebank(corpus.Treebank("x", ()), {}, [])
    assert synth.verify_synth(short, sub).of_kind("length")


def test_SynthReport_of_kind():
    report = synth.SynthReport()
    assert report.ok
    assert synth.SynthReport().violations is not report.violations

    report.violations.append(synth.Violation(2, "edge", "x"))
    report.violations.append(synth.Violation(-1, "length", "y"))
    assert not report.ok
    assert report.of_kind("edge") == [synth.Violation(2, "edge", "x")]
    assert report.of_kind("projectivity") == []
