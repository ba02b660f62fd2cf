# ---------------------------------------------------------------------------
# Typoscope
#
# test_predictor.py
#
# Performs unit tests on functions and class methods declared in
# model/predictor.py.
# ---------------------------------------------------------------------------

import numpy
import pytest

from typoscope import const, corpus, ecbaseline, typology, util
from typoscope.exceptions import CatalogMismatchError, DataError, \
                                 EmptyDataError, ShapeError
from typoscope.features import hand, neural
from typoscope.model import predictor, scorer


@pytest.fixture(scope="module")
def fixture_data():
    tb = corpus.read_treebank("data/fixture.conllu")
    gold = typology.directionality(tb)
    return tb, corpus.to_tagged_corpus(tb), gold


def small_spec(kind):
    depth = 0 if kind == const.ModelKind.BIAS else 1
    return predictor.ModelSpec(
        kind=kind,
        hand_net=predictor.NetSpec(depth, 6, const.Activation.SIGMOID, 0.4),
        neural_net=predictor.NetSpec(1, 5, const.Activation.RELU, 0.2),
        features=hand.FeatureConfig(windows=(1, -1)),
        emb_size=4,
        rnn_size=3,
        pooling=neural.PoolingSpec(betas=(-1.0, 0.0, 1.0)),
        alpha=0.6)


def make_model(kind, fixture_data, seed=0):
    _, c, gold = fixture_data
    stats = typology.init_stats([gold])
    return predictor.ModelFactory.create_instance(
        small_spec(kind), stats, c.tag_inventory(),
        numpy.random.default_rng(seed))


def perturb(m, seed=1):
    rng = numpy.random.default_rng(seed)
    for _, a in m.trainable_arrays():
        a += rng.normal(0.0, 0.3, size=a.shape)


def test_Prediction_resolve():
    pred = predictor.Prediction("x", {"det": 0.1, const.UNK_RELATION: 0.4})

    assert pred.resolve(["det", "obj"]) == {"det": 0.1, "obj": 0.4}

    with pytest.raises(DataError):
        predictor.Prediction("x", {"det": 0.1}).resolve(["obj"])


def test_PredictionWriter_write(tmp_path):
    pred = predictor.Prediction("x", {"obj": 0.1 + 0.2, "det": 1e-17},
                                const.ModelKind.NEURAL)
    filename = str(tmp_path / "x.prediction.json")
    predictor.PredictionWriter().write(filename, pred)

    assert predictor.PredictionReader().read(filename) == pred


@pytest.mark.parametrize("kind", [const.ModelKind.BIAS, const.ModelKind.HAND,
                                  const.ModelKind.NEURAL,
                                  const.ModelKind.COMBINED])
def test_ModelFactory_create_instance(kind, fixture_data):
    _, c, gold = fixture_data
    m = make_model(kind, fixture_data)
    stats = typology.init_stats([gold])
    pbar = dict(stats.pbar)
    pbar[const.UNK_RELATION] = scorer.unk_pbar(stats)
    pred = m.predict(c)

    assert m.kind == kind
    assert m.relations == gold.relations() + [const.UNK_RELATION]
    for r, p in pbar.items():
        expected = util.logistic(numpy.array([scorer.output_bias(p)]))[0]
        assert pred.probabilities[r] == pytest.approx(float(expected),
                                                      abs=1e-12)


def test_ModelFactory_create_instance_dropout(fixture_data):
    _, c, gold = fixture_data
    m = predictor.ModelFactory.create_instance(
        small_spec(const.ModelKind.COMBINED), typology.init_stats([gold]),
        c.tag_inventory(), numpy.random.default_rng(0), dropout_rate=0.0)

    assert m.hand_model.params.dims.dropout_rate == 0.0
    assert m.neural_model.params.dims.dropout_rate == 0.0


def test_ModelFactory_create_instance_ec(fixture_data):
    with pytest.raises(ValueError):
        make_model(const.ModelKind.EC, fixture_data)


def test_ModelFactory_create_instance_deterministic(fixture_data):
    a = make_model(const.ModelKind.COMBINED, fixture_data, seed=5)
    b = make_model(const.ModelKind.COMBINED, fixture_data, seed=5)

    assert predictor.ModelWriter().dumps(a) == predictor.ModelWriter().dumps(b)


def test_HandModel___init__(fixture_data):
    m = make_model(const.ModelKind.HAND, fixture_data)

    with pytest.raises(ShapeError):
        predictor.HandModel(hand.FeatureConfig(windows=(1,)), m.tags,
                            m.params)


def test_CombinedModel___init__(fixture_data):
    m = make_model(const.ModelKind.COMBINED, fixture_data)
    other = scorer.ScoringParams(
        ["det", const.UNK_RELATION], m.neural_model.params.dims,
        {"W1": m.neural_model.params.arrays["W1"],
         "b1": m.neural_model.params.arrays["b1"],
         "V": numpy.zeros((2, 5)), "bV": numpy.zeros(2)})
    nm = predictor.NeuralModel(m.neural_model.gru, m.neural_model.pooling,
                               other)

    with pytest.raises(CatalogMismatchError):
        predictor.CombinedModel(m.hand_model, nm)


def test_CombinedModel_scores(fixture_data):
    _, c, _ = fixture_data
    m = make_model(const.ModelKind.COMBINED, fixture_data)
    perturb(m)
    sh = m.hand_model.scores(c).values
    sn = m.neural_model.scores(c).values

    numpy.testing.assert_allclose(m.scores(c).values, 0.6 * sh + 0.4 * sn,
                                  atol=1e-14)


def test_NeuralModel_prepare_example(fixture_data):
    _, c, _ = fixture_data
    m = make_model(const.ModelKind.NEURAL, fixture_data)
    m.max_len = 4

    assert all(len(seq) <= 6 for seq in m.prepare_example(c))
    m.max_len = 1
    with pytest.raises(EmptyDataError):
        m.prepare_example(c)


@pytest.mark.parametrize("kind", [const.ModelKind.BIAS, const.ModelKind.HAND,
                                  const.ModelKind.NEURAL,
                                  const.ModelKind.COMBINED])
def test_ModelWriter_write(kind, fixture_data, tmp_path):
    _, c, _ = fixture_data
    m = make_model(kind, fixture_data)
    perturb(m)
    m.metadata = {"seed": 7, "point": kind}
    filename = str(tmp_path / "model.json")
    predictor.ModelWriter().write(filename, m)
    back = predictor.ModelReader().read(filename)

    assert back.kind == kind
    assert back.metadata == m.metadata
    assert back.relations == m.relations
    for (na, a), (nb, b) in zip(m.trainable_arrays(),
                                back.trainable_arrays()):
        assert na == nb
        numpy.testing.assert_array_equal(a, b)
    assert back.predict(c) == m.predict(c)
    assert predictor.ModelWriter().dumps(back) == \
        predictor.ModelWriter().dumps(m)


def test_ModelWriter_write_infinite_betas(fixture_data, tmp_path):
    m = make_model(const.ModelKind.NEURAL, fixture_data)
    m.metadata = {"point": {"kind": "neural",
                            "betas": [float("-inf"), 1.0, float("inf")]}}
    filename = str(tmp_path / "model.json")
    predictor.ModelWriter().write(filename, m)
    back = predictor.ModelReader().read(filename)

    assert back.metadata["point"]["betas"] == ["-inf", 1.0, "inf"]


def test_ModelReader_read_ec(fixture_data, tmp_path):
    tb, c, _ = fixture_data
    m = predictor.ECModelAdapter(ecbaseline.ec_train([tb], w=3))
    filename = str(tmp_path / "ec.model.json")
    predictor.ModelWriter().write(filename, m)
    back = predictor.ModelReader().read(filename)

    assert isinstance(back, predictor.ECModelAdapter)
    assert back.predict(c) == m.predict(c)


def test_ModelReader_read_unknown_kind(tmp_path):
    filename = str(tmp_path / "bad.json")
    with open(filename, "wt") as f:
        f.write('{"format": "typoscope", "format_version": "1.0", '
                '"kind": "model", "model_kind": "forest", "blocks": [], '
                '"relations": []}\n')

    with pytest.raises(DataError):
        predictor.ModelReader().read(filename)


def test_ECModelAdapter_predict(fixture_data):
    tb, c, gold = fixture_data
    m = predictor.ECModelAdapter(ecbaseline.ec_train([tb], w=3))
    pred = m.predict(c)

    assert m.relations[-1] == const.UNK_RELATION
    assert pred.probabilities[const.UNK_RELATION] == 0.5
    assert pred.model_kind == const.ModelKind.EC
    assert pred.resolve(["punct-like"]) == {"punct-like": 0.5}
    resolved = pred.resolve(gold.relations())
    assert set(resolved) == set(gold.relations())
    for r, p in resolved.items():
        assert 0.0 <= p <= 1.0
        if r not in m.relations:
            assert p == 0.5
    assert resolved["det"] == 0.0


def test_ECModelAdapter_scores(fixture_data):
    tb, c, _ = fixture_data
    m = predictor.ECModelAdapter(ecbaseline.ec_train([tb], w=3))
    s = m.scores(c)
    probs = m.predict(c).probabilities

    assert s.relations == m.relations
    assert s.values[m.relations.index("det")] == -numpy.inf
    assert s.values[-1] == 0.0
    for r, p in scorer.to_directionality(s).items():
        assert p == pytest.approx(probs[r], abs=1e-12)


def test_model_summary(fixture_data):
    m = make_model(const.ModelKind.BIAS, fixture_data)
    n = len(m.relations)

    assert predictor.model_summary(m) == \
        "bias model, {0} relations, {1} parameters".format(n, n)
