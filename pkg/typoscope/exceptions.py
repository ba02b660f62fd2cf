# ---------------------------------------------------------------------------
# Typoscope
#
# exceptions.py
#
# Declares exceptions raised by this package.
# ---------------------------------------------------------------------------


class TyposcopeError(Exception):
    pass


class UsageError(TyposcopeError):
    pass


class DataError(TyposcopeError):
    pass


class EmptyDataError(DataError):
    pass


class ConllParseError(DataError):

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = "line {0}: {1}".format(line_number, message)
        super(ConllParseError, self).__init__(message)
        self.line_number = line_number


class TreeStructureError(DataError):

    def __init__(self, message, sentence=None):
        if sentence is not None:
            message = "sentence {0}: {1}".format(sentence, message)
        super(TreeStructureError, self).__init__(message)
        self.sentence = sentence


class FormatVersionError(DataError):
    pass


class ConfigError(TyposcopeError, ValueError):
    pass


class ShapeError(TyposcopeError):

    def __init__(self, what, expected, actual):
        super(ShapeError, self).__init__(
            "{0}: expected dimension {1}, got {2}".format(what, expected,
                                                          actual))
        self.expected = expected
        self.actual = actual


class CatalogMismatchError(TyposcopeError):
    pass


class DivergenceError(TyposcopeError):
    pass
