# ---------------------------------------------------------------------------
# Typoscope
#
# util.py
#
# Provides utility functions.
# ---------------------------------------------------------------------------

import logging
import math
import numpy
import os
import sys
import zlib

from typoscope import const
from typoscope.exceptions import ConfigError


MESSAGE_FORMAT_INFO = "%(asctime)s.%(msecs)03d %(levelname)s - %(message)s"
MESSAGE_FORMAT_DEBUG = \
    "%(asctime)s.%(msecs)03d %(levelname)s %(name)s - %(message)s"

SEED_ENV_VAR = "TYPOSCOPE_SEED"

logging.basicConfig(
        stream=sys.stdout,
        level=logging.INFO,
        format=MESSAGE_FORMAT_INFO,
        datefmt="%H:%M:%S")

logger = logging.getLogger(__name__)


def run(mainFunction, programName, **kwargs):
    """Provides a common main entry point.

    Initializes a logger, prints banner, calls the main function, and exits
    with a code returned by the main function.

    :param mainFunction: main function to be executed.
                         It should return an integer.
    :param programName: program name.
    """
    log_level = kwargs.get("log_level", logging.INFO)
    logging.getLogger().setLevel(log_level)

    if log_level == logging.DEBUG:
        log_format = MESSAGE_FORMAT_DEBUG
    else:
        log_format = MESSAGE_FORMAT_INFO
    log_formatter = logging.Formatter(log_format, datefmt="%H:%M:%S")

    c = logger
    while c:
        for h in c.handlers:
            if log_level >= h.level:
                h.setFormatter(log_formatter)
        if not c.propagate:
            c = None
        else:
            c = c.parent

    logging.info("This is %s.", programName)

    exitCode = mainFunction()
    logging.debug("exiting with code %d", exitCode)

    exit_flag = kwargs.get("exit", True)
    if exit_flag:
        sys.exit(exitCode)
    return exitCode


def resolve_seed(value=None, default_value=const.Defaults.SEED):
    """Returns the seed to use.

    An explicit value wins, then the TYPOSCOPE_SEED environment variable,
    then the default.
    """
    if value is not None:
        return int(value)
    env = os.environ.get(SEED_ENV_VAR)
    if env:
        try:
            return int(env)
        except ValueError:
            logger.error("ignored non-integer value %s of %s", env,
                         SEED_ENV_VAR)
    return default_value


def derive_rng(seed, label, *extra):
    """Returns a numpy generator for a labeled random stream.

    Streams with different labels (init, shuffle, dropout, synth, ...) are
    independent; the same (seed, label, extra) always gives the same stream.
    """
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(label.encode("utf-8"))]
    key.extend(int(x) & 0xFFFFFFFF for x in extra)
    return numpy.random.default_rng(numpy.random.SeedSequence(key))


def logistic(s):
    """Numerically stable elementwise 1/(1 + exp(-s))."""
    s = numpy.asarray(s, dtype=float)
    out = numpy.empty_like(s)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + numpy.exp(-s[pos]))
    e = numpy.exp(s[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logit(p):
    if p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return math.inf
    return math.log(p / (1.0 - p))


def clip(v, lo, hi):
    return max(lo, min(hi, v))


def format_float(v):
    """Formats a real so that float(format_float(v)) == v."""
    return repr(float(v))


def format_window(w):
    return "inf" if w is None else str(w)


def parse_window(s):
    """Parses a window size; 'inf' (or 0) is an unbounded window."""
    s = str(s).strip().lower()
    if s in ("inf", "infinity", "none", "0"):
        return None
    try:
        w = int(s)
    except ValueError:
        raise ConfigError("bad window size {0}".format(s))
    if w < 0:
        raise ConfigError("negative window size {0}".format(s))
    return w


def parse_float_list(s):
    return [float(x) for x in s.split(",") if len(x) > 0]


def parse_int_list(s):
    return [int(x) for x in s.split(",") if len(x) > 0]


def write_tsv(filename, header, rows):
    logger.info("Creating file %s", filename)
    with open(filename, "wt", encoding="utf-8", newline="\n") as f:
        f.write("\t".join(header) + "\n")
        for row in rows:
            f.write("\t".join(format_cell(v) for v in row) + "\n")


def read_tsv(filename):
    """Returns (header, rows) of a tab-separated file."""
    with open(filename, "rt", encoding="utf-8") as f:
        lines = [ln.rstrip("\r\n") for ln in f]
    lines = [ln for ln in lines if len(ln) > 0]
    if len(lines) == 0:
        return [], []
    return lines[0].split("\t"), [ln.split("\t") for ln in lines[1:]]


def format_cell(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, numpy.floating)):
        return format_float(v)
    return str(v)
