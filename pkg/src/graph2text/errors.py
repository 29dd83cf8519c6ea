"""Exception types shared across the package."""


class Graph2TextError(Exception):
    """Base class for all package errors."""


class InvalidGraph(Graph2TextError):
    pass


class ParseError(Graph2TextError):
    """Malformed PENMAN input.

    ``offset`` is the 0-based character index where parsing failed and
    ``expected`` describes what the parser wanted to see there.
    """

    def __init__(self, message, offset, expected=None):
        self.offset = offset
        self.expected = expected
        detail = f"{message} at offset {offset}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class MissingTitle(Graph2TextError):
    pass


class MalformedSequence(Graph2TextError):
    pass


class TooManySpans(Graph2TextError):
    pass


class InconsistentPair(Graph2TextError):
    pass


class LengthMismatch(Graph2TextError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(message)


class EmptyHypothesisSet(Graph2TextError):
    pass


class EmptyCorpus(Graph2TextError):
    pass


class CorpusError(Graph2TextError):
    pass


class IncompatibleFormats(Graph2TextError):
    pass


class ShapeError(Graph2TextError):
    pass


class Divergence(Graph2TextError):
    pass
