# ---------------------------------------------------------------------------
# Typoscope
#
# const.py
#
# Declares constants used by this package.
# ---------------------------------------------------------------------------


BOUNDARY_TAG = "#"
UNK_RELATION = "<UNK>"
ROOT_RELATION = "root"

# UD v1.2 universal POS tags. Documentation only: the tagset is open.
UD_V1_TAGS = ("ADJ", "ADP", "ADV", "AUX", "CONJ", "DET", "INTJ", "NOUN",
              "NUM", "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM",
              "VERB", "X")


class RelationSchemeMode:
    STRIP_SUBTYPES = "strip"
    KEEP_SUBTYPES = "keep"
    POS_PAIR = "pos-pair"

    ALL = (STRIP_SUBTYPES, KEEP_SUBTYPES, POS_PAIR)


class Direction:
    LEFTWARD = "leftward"
    RIGHTWARD = "rightward"


class Activation:
    SIGMOID = "sigmoid"
    RELU = "relu"

    ALL = (SIGMOID, RELU)


class Optimizer:
    SGD = "sgd"
    RMSPROP = "rmsprop"

    ALL = (SGD, RMSPROP)


class FeatureFamily:
    CONDITIONAL = "conditional"
    JOINT = "joint"
    PMI = "pmi"
    ASYMMETRY = "asymmetry"
    B_THRESHOLD = "b-threshold"
    TRUNCATED = "truncated"

    # emitted template families, in catalog order
    TEMPLATES = (CONDITIONAL, JOINT, PMI, ASYMMETRY)
    ALL = (CONDITIONAL, JOINT, PMI, ASYMMETRY, B_THRESHOLD, TRUNCATED)


class ModelKind:
    BIAS = "bias"
    HAND = "hand"
    NEURAL = "neural"
    COMBINED = "combined"
    EC = "ec"

    ALL = (BIAS, HAND, NEURAL, COMBINED, EC)


class Resampling:
    NONE = "none"
    BOOTSTRAP = "bootstrap"
    SUBSAMPLE = "subsample"

    ALL = (NONE, BOOTSTRAP, SUBSAMPLE)


class ExitCode:
    SUCCESS = 0
    USAGE_ERROR = 1
    DATA_ERROR = 2


class Defaults:
    EPS = 0.1
    MAX_LEN = 40
    EC_WINDOW = 8
    EC_WINDOW_GRID = (2, 4, 8, 16, None)    # None is an unbounded window
    BINARY_TOP_K = 20
    LAMBDA = 1.0
    POOL_BETAS = (-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0)
    POOL_MAX_SENTENCES = 10000
    BIAS_CLIP = 10.0
    ALPHA = 0.7
    SGD_LEARNING_RATE = 0.1
    RMSPROP_LEARNING_RATE = 0.001
    RMSPROP_DECAY = 0.9
    RMSPROP_STABILIZER = 1e-8
    EPOCHS = 50
    SEED = 0
