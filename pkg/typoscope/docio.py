# ---------------------------------------------------------------------------
# Typoscope
#
# docio.py
#
# Reads and writes the versioned structured-text documents (models,
# predictions, summaries). See docs/source/formats.rst for the layout.
# ---------------------------------------------------------------------------

import base64
import json
import logging
import math
import numpy

from typoscope.exceptions import DataError, FormatVersionError


logger = logging.getLogger(__name__)

FORMAT_NAME = "typoscope"
FORMAT_VERSION = "1.0"


def major_version(version):
    return int(str(version).split(".")[0])


def encode_array(name, a):
    """Encodes a float array losslessly as a named parameter block."""
    a = numpy.ascontiguousarray(a, dtype="<f8")
    return {
        "name": name,
        "shape": list(a.shape),
        "data": base64.b64encode(a.tobytes()).decode("ascii"),
    }


def decode_array(block):
    shape = tuple(int(n) for n in block["shape"])
    raw = base64.b64decode(block["data"].encode("ascii"))
    a = numpy.frombuffer(raw, dtype="<f8").astype(float)
    expected = int(numpy.prod(shape)) if len(shape) > 0 else 1
    if a.size != expected:
        raise DataError("parameter block {0}: {1} values for shape "
                        "{2}".format(block.get("name"), a.size, shape))
    return a.reshape(shape)


def json_value(v):
    """Writes infinities, which JSON cannot hold, as "inf" and "-inf"."""
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if isinstance(v, dict):
        return {k: json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [json_value(x) for x in v]
    return v


def encode_blocks(named_arrays):
    return [encode_array(name, a) for name, a in named_arrays]


def decode_blocks(blocks):
    return {b["name"]: decode_array(b) for b in blocks}


class DocumentWriter:

    def __init__(self, kind):
        self.kind = kind

    def make_document(self, body):
        doc = {
            "format": FORMAT_NAME,
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
        }
        doc.update(json_value(body))
        return doc

    def dumps(self, body):
        return json.dumps(self.make_document(body), indent=1,
                          ensure_ascii=False, allow_nan=False) + "\n"

    def write(self, filename, body):
        logger.info("Creating file %s", filename)
        with open(filename, "wt", encoding="utf-8", newline="\n") as f:
            f.write(self.dumps(body))


class DocumentReader:

    def __init__(self, kinds=None):
        # None accepts any kind.
        self.kinds = kinds

    def loads(self, text, source="<string>"):
        try:
            doc = json.loads(text)
        except ValueError as ex:
            raise DataError("{0}: not a typoscope document ({1})".format(
                source, ex))
        if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
            raise DataError("{0}: not a typoscope document".format(source))
        version = doc.get("format_version", "")
        try:
            major = major_version(version)
        except ValueError:
            raise FormatVersionError("{0}: malformed format version "
                                     "{1}".format(source, version))
        if major != major_version(FORMAT_VERSION):
            raise FormatVersionError(
                "{0}: unsupported format version {1} (this reader supports "
                "{2}.x)".format(source, version,
                                major_version(FORMAT_VERSION)))
        if self.kinds is not None and doc.get("kind") not in self.kinds:
            raise DataError("{0}: expected a document of kind {1}, got "
                            "{2}".format(source, "/".join(self.kinds),
                                         doc.get("kind")))
        return doc

    def read(self, filename):
        with open(filename, "rt", encoding="utf-8") as f:
            return self.loads(f.read(), filename)
