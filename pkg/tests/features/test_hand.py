# ---------------------------------------------------------------------------
# Typoscope
#
# test_hand.py
#
# Performs unit tests on functions and class methods declared in
# features/hand.py.
# ---------------------------------------------------------------------------

from hypothesis import given, settings, strategies as st
import logging
import numpy
import pytest

from typoscope import const, corpus, util
from typoscope.exceptions import ConfigError, EmptyDataError
from typoscope.features import hand


TAGS = ["A", "B", "C"]

tag_corpora = st.lists(st.lists(st.sampled_from(TAGS), min_size=1,
                                max_size=8),
                       min_size=1, max_size=6).map(
    lambda lists: corpus.TaggedCorpus.from_tag_lists("x", lists))


@pytest.fixture
def fixture_corpus():
    return corpus.to_tagged_corpus(corpus.read_treebank(
        "data/fixture.conllu"))


def window_tags(seq, j, size):
    """Literal window of signed size around position j of a boundary-
    augmented sequence, boundaries beyond the ends included."""
    out = []
    step = 1 if size > 0 else -1
    for k in range(1, abs(size) + 1):
        p = j + step * k
        out.append(seq[p] if 0 <= p < len(seq) else const.BOUNDARY_TAG)
    return out


def literal_g(seq, j, spec, measure, t):
    tags = window_tags(seq, j, spec.size)
    if spec.truncated:
        kept = []
        for x in tags:
            if x == const.BOUNDARY_TAG or x == seq[j]:
                break
            kept.append(x)
        tags = kept
    count = sum(1 for x in tags if x == t)
    if measure == hand.FRACTION:
        return None if len(tags) == 0 else count / len(tags)
    return 1.0 if count >= int(measure[1:]) else 0.0


def literal_table(c, spec, measure, lam, inv):
    g_sum = {t: 0.0 for t in inv.context_tags}
    g_sum_s = {(s, t): 0.0 for s in inv.real_tags for t in inv.context_tags}
    n = 0
    n_s = {s: 0 for s in inv.real_tags}
    for seq in c.tag_sequences:
        for j in range(1, len(seq) - 1):
            values = {t: literal_g(seq, j, spec, measure, t)
                      for t in inv.context_tags}
            if values[inv.context_tags[0]] is None:
                continue
            n += 1
            n_s[seq[j]] += 1
            for t, v in values.items():
                g_sum[t] += v
                g_sum_s[(seq[j], t)] += v
    m = sum(g_sum.values()) / (n * len(inv.context_tags)) if n > 0 else 0.0
    pi_t = {t: (g_sum[t] + lam * m) / (n + lam) if n + lam > 0 else 0.0
            for t in inv.context_tags}
    pi_ts = dict()
    for s in inv.real_tags:
        for t in inv.context_tags:
            if n_s[s] + lam > 0:
                pi_ts[(s, t)] = (g_sum_s[(s, t)] + lam * pi_t[t]) / \
                    (n_s[s] + lam)
            else:
                pi_ts[(s, t)] = pi_t[t]
    return pi_t, pi_ts


def test_WindowSpec_label():
    assert hand.WindowSpec(1).label == "+1"
    assert hand.WindowSpec(-8, True).label == "-8^"
    assert hand.WindowSpec(3, True).mirror() == hand.WindowSpec(-3, True)


def test_FeatureConfig___post_init__():
    with pytest.raises(ConfigError):
        hand.FeatureConfig(windows=(0,))
    with pytest.raises(ConfigError):
        hand.FeatureConfig(windows=())
    with pytest.raises(ConfigError):
        hand.FeatureConfig(families=("ngrams",))
    with pytest.raises(ConfigError):
        hand.FeatureConfig(b_values=(0,))
    with pytest.raises(ConfigError):
        hand.FeatureConfig(lam=-1.0)
    with pytest.raises(ConfigError):
        hand.FeatureConfig(length_thresholds=(0,))


def test_FeatureConfig_measures():
    assert hand.FeatureConfig().measures() == ["frac", "b1", "b2"]
    assert hand.FeatureConfig(
        families=(const.FeatureFamily.CONDITIONAL,)).measures() == ["frac"]


def test_FeatureConfig_table_specs():
    cfg = hand.FeatureConfig(windows=(1, 3), families=(
        const.FeatureFamily.ASYMMETRY, const.FeatureFamily.TRUNCATED))
    specs = cfg.table_specs()

    assert hand.WindowSpec(-1) in specs
    assert hand.WindowSpec(-3, True) in specs
    assert len(specs) == 8


def test_FeatureConfig_from_dict():
    cfg = hand.FeatureConfig.from_dict({"windows": [1, -1], "lambda": 0})

    assert cfg.windows == (1, -1)
    assert cfg.lam == 0.0
    assert hand.FeatureConfig.from_dict(cfg.to_dict()) == cfg
    assert hand.FeatureConfig.from_dict({}) == hand.FeatureConfig()

    with pytest.raises(ConfigError):
        hand.FeatureConfig.from_dict({"window": [1]})
    with pytest.raises(ConfigError):
        hand.FeatureConfig.from_dict({"windows": ["wide"]})


def test_FeatureConfig_is_empty():
    assert hand.FeatureConfig.bias_only().is_empty
    assert hand.FeatureConfig(
        families=(const.FeatureFamily.TRUNCATED,)).is_empty
    assert not hand.FeatureConfig().is_empty


def test_TagInventory():
    inv = hand.TagInventory(["V", "N", "#", "N"])

    assert inv.real_tags == ["N", "V"]
    assert inv.context_tags == ["#", "N", "V"]


def test_clipped_ratio():
    assert hand.clipped_ratio(0.5, 0.25) == 1.0
    assert hand.clipped_ratio(0.25, 0.5) == 0.5
    assert hand.clipped_ratio(0.0, 0.0) == 1.0
    assert hand.clipped_ratio(0.3, 0.0) == 1.0


def test_clipped_ratio_array():
    out = hand.clipped_ratio_array(numpy.array([0.5, 0.25, 0.0]),
                                   numpy.array([0.25, 0.5, 0.0]))

    numpy.testing.assert_array_equal(out, [1.0, 0.5, 1.0])


@settings(max_examples=50, deadline=None)
@given(tag_corpora)
def test_prevalence_tables_bigram_identity(c):
    cfg = hand.FeatureConfig(windows=(1,),
                             families=(const.FeatureFamily.CONDITIONAL,),
                             lam=0.0)
    inv = hand.TagInventory(c.tag_inventory())
    tab = hand.prevalence_tables(c, cfg, inv)[(hand.WindowSpec(1), "frac")]

    bigrams = dict()
    unigrams = dict()
    for seq in c.tag_sequences:
        for a, b in zip(seq[1:-1], seq[2:]):
            bigrams[(a, b)] = bigrams.get((a, b), 0) + 1
            unigrams[a] = unigrams.get(a, 0) + 1
    for i, s in enumerate(inv.real_tags):
        for k, t in enumerate(inv.context_tags):
            expected = bigrams.get((s, t), 0) / unigrams[s]
            assert abs(tab.pi_ts[i, k] - expected) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(tag_corpora, st.sampled_from([1, 2, 3, -1, -2, -5]), st.booleans(),
       st.sampled_from([0.0, 1.0, 2.5]))
def test_prevalence_tables_brute_force(c, size, truncated, lam):
    cfg = hand.FeatureConfig(windows=(size,), families=(
        const.FeatureFamily.CONDITIONAL, const.FeatureFamily.B_THRESHOLD,
        const.FeatureFamily.TRUNCATED), b_values=(1, 2), lam=lam)
    inv = hand.TagInventory(c.tag_inventory())
    tables = hand.prevalence_tables(c, cfg, inv)
    spec = hand.WindowSpec(size, truncated)

    for measure in cfg.measures():
        tab = tables[(spec, measure)]
        pi_t, pi_ts = literal_table(c, spec, measure, lam, inv)
        for k, t in enumerate(inv.context_tags):
            assert abs(tab.pi_t[k] - pi_t[t]) <= 1e-12
            for i, s in enumerate(inv.real_tags):
                assert abs(tab.pi_ts[i, k] - pi_ts[(s, t)]) <= 1e-12


def test_prevalence_tables_empty():
    c = corpus.TaggedCorpus("x", ())

    with pytest.raises(EmptyDataError):
        hand.prevalence_tables(c, hand.FeatureConfig())


def test_WindowStatistics_unknown_tags():
    c = corpus.TaggedCorpus.from_tag_lists("x", [["A", "Z", "A", "B"]])
    inv = hand.TagInventory(["A", "B"])
    stats = hand.WindowStatistics(c, 2, True, inv)

    # Z fills a window slot but is never reported
    g, anchors = stats.g("frac")
    assert g.shape[1] == 3
    tab = stats.table("frac", 0.0, hand.WindowSpec(2, True))
    # the first A sees only Z before the repeated A; the second A sees B
    assert tab.pi_ts[0, inv.context_index["B"]] == pytest.approx(0.5,
                                                                 abs=1e-15)
    assert tab.n_s[0] == 2


def test_HandFeaturizer_catalog():
    cfg = hand.FeatureConfig(windows=(1,),
                             families=(const.FeatureFamily.CONDITIONAL,))
    f = hand.HandFeaturizer(cfg, ["N", "V"])

    # |context| unconditioned + |real| x |context| conditioned
    assert f.dim == 3 + 2 * 3
    assert f.catalog().names[0] == "len40/uncond/w+1/frac/*/#"
    assert f.catalog().names[3] == "len40/cond/w+1/frac/N/#"


def test_HandFeaturizer_featurize(fixture_corpus):
    f = hand.HandFeaturizer(hand.FeatureConfig(), fixture_corpus
                            .tag_inventory())
    fv = f.featurize(fixture_corpus)

    assert len(fv) == f.dim
    assert numpy.all(fv.values >= 0.0)
    assert numpy.all(fv.values <= 1.0)
    assert fv.catalog == f.catalog()
    # determinism
    numpy.testing.assert_array_equal(fv.values,
                                     f.featurize(fixture_corpus).values)


def test_HandFeaturizer_featurize_mirror(fixture_corpus):
    cfg = hand.FeatureConfig(families=(
        const.FeatureFamily.CONDITIONAL, const.FeatureFamily.JOINT,
        const.FeatureFamily.PMI, const.FeatureFamily.B_THRESHOLD,
        const.FeatureFamily.TRUNCATED))
    f = hand.HandFeaturizer(cfg, fixture_corpus.tag_inventory())
    fv = f.featurize(fixture_corpus)
    rv = f.featurize(corpus.corpus_reversed(fixture_corpus))

    for name in f.catalog().names:
        parts = name.split("/")
        label = parts[2]
        mirrored = "w" + ("-" if label[1] == "+" else "+") + label[2:]
        other = "/".join(parts[:2] + [mirrored] + parts[3:])
        assert fv.get(name) == pytest.approx(rv.get(other), abs=1e-12)


def test_HandFeaturizer_featurize_length_threshold(fixture_corpus):
    cfg = hand.FeatureConfig(windows=(1,), length_thresholds=(4, 40))
    f = hand.HandFeaturizer(cfg, fixture_corpus.tag_inventory())
    fv = f.featurize(fixture_corpus)

    assert len(fv) == f.dim
    assert f.catalog().names[0].startswith("len4/")
    short = hand.featurize_hand(corpus.length_filter(fixture_corpus, 4),
                                hand.FeatureConfig(windows=(1,),
                                                   length_thresholds=(4,)),
                                fixture_corpus.tag_inventory())
    numpy.testing.assert_array_equal(fv.values[:len(short)], short.values)

    with pytest.raises(EmptyDataError):
        hand.HandFeaturizer(hand.FeatureConfig(length_thresholds=(2,)),
                            fixture_corpus.tag_inventory()) \
            .featurize(fixture_corpus)


def test_HandFeaturizer_featurize_unknown_tags(fixture_corpus, caplog):
    f = hand.HandFeaturizer(hand.FeatureConfig(windows=(1,)),
                            ["DET", "NOUN", "VERB"])

    with caplog.at_level(logging.WARNING):
        fv = f.featurize(fixture_corpus)
    assert len(fv) == f.dim
    assert "ADJ" in caplog.text


def test_featurize_hand_bias_only(fixture_corpus):
    fv = hand.featurize_hand(fixture_corpus, hand.FeatureConfig.bias_only())

    assert len(fv) == 0


def test_FeatureVectorWriter_write(tmp_path):
    c = corpus.read_tagged_corpus("data/tags.txt")
    fv = hand.featurize_hand(c, hand.FeatureConfig(windows=(1,)))
    filename = str(tmp_path / "f.tsv")
    hand.FeatureVectorWriter().write(filename, fv)

    header, rows = util.read_tsv(filename)
    assert header == ["feature", "value"]
    assert len(rows) == len(fv)
    assert [float(r[1]) for r in rows] == list(fv.values)
