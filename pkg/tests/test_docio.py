# ---------------------------------------------------------------------------
# Typoscope
#
# test_docio.py
#
# Performs unit tests on functions and class methods declared in docio.py.
# ---------------------------------------------------------------------------

import json
import numpy
import pytest

from typoscope import docio
from typoscope.exceptions import DataError, FormatVersionError


def test_encode_array():
    b = docio.encode_array("W1", numpy.arange(6.0).reshape(2, 3))

    assert b["name"] == "W1"
    assert b["shape"] == [2, 3]
    assert isinstance(b["data"], str)


def test_decode_array():
    a = numpy.array([[0.1, 1.0 / 3.0], [-2.5e-300, 7.0]])
    b = docio.decode_array(docio.encode_array("x", a))

    # bit-exact
    assert b.shape == (2, 2)
    assert b.tobytes() == a.tobytes()

    bad = docio.encode_array("x", a)
    bad["shape"] = [3, 3]
    with pytest.raises(DataError):
        docio.decode_array(bad)


def test_decode_blocks():
    blocks = docio.encode_blocks([("a", numpy.zeros(2)),
                                  ("b", numpy.ones((1, 2)))])
    d = docio.decode_blocks(blocks)

    assert sorted(d) == ["a", "b"]
    assert d["b"].shape == (1, 2)


def test_DocumentWriter_make_document():
    doc = docio.DocumentWriter("model").make_document({"x": 1})

    assert list(doc.keys()) == ["format", "format_version", "kind", "x"]
    assert doc["kind"] == "model"
    assert doc["format_version"] == docio.FORMAT_VERSION


def test_DocumentWriter_dumps():
    w = docio.DocumentWriter("prediction")

    assert w.dumps({"a": 0.1}) == w.dumps({"a": 0.1})
    with pytest.raises(ValueError):
        w.dumps({"a": float("nan")})

    doc = json.loads(w.dumps({"settings": {"betas": (float("-inf"), 0.5,
                                                     float("inf"))}}))
    assert doc["settings"]["betas"] == ["-inf", 0.5, "inf"]


def test_DocumentReader_loads():
    text = docio.DocumentWriter("model").dumps({"x": [1, 2]})

    doc = docio.DocumentReader(["model"]).loads(text)
    assert doc["x"] == [1, 2]

    with pytest.raises(DataError):
        docio.DocumentReader(["prediction"]).loads(text)
    with pytest.raises(DataError):
        docio.DocumentReader().loads("not json")
    with pytest.raises(DataError):
        docio.DocumentReader().loads(json.dumps({"format": "other"}))

    future = json.loads(text)
    future["format_version"] = "2.0"
    with pytest.raises(FormatVersionError):
        docio.DocumentReader().loads(json.dumps(future))

    # minor versions are accepted
    minor = json.loads(text)
    minor["format_version"] = "1.7"
    assert docio.DocumentReader().loads(json.dumps(minor))["x"] == [1, 2]


def test_DocumentReader_read(tmp_path):
    filename = str(tmp_path / "doc.json")
    docio.DocumentWriter("evaluation").write(filename, {"mean_loss": 0.25})

    doc = docio.DocumentReader(["evaluation"]).read(filename)
    assert doc["mean_loss"] == 0.25
