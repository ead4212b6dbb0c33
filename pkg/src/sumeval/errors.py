"""Exception hierarchy shared across the harness."""


class SumevalError(Exception):
    """Base class for all harness errors."""


class InvalidArgument(SumevalError, ValueError):
    pass


class MalformedRecord(SumevalError):
    """A dataset record is missing fields, duplicated or unparseable."""

    def __init__(self, message, index=None):
        self.index = index
        if index is not None:
            message = f"record {index}: {message}"
        super().__init__(message)


class UnknownArticle(SumevalError):
    def __init__(self, article_id):
        self.article_id = article_id
        super().__init__(f"unknown article id: {article_id!r}")


class ZeroVector(SumevalError, ValueError):
    pass


class EmptyTokenization(SumevalError):
    pass


class ProviderFailure(SumevalError):
    """An embedding provider could not produce vectors."""


class ConvergenceFailure(SumevalError):
    def __init__(self, iterations, error):
        self.iterations = iterations
        self.error = error
        super().__init__(
            f"pagerank did not converge in {iterations} iterations (L1 change {error:.3g})"
        )


class CacheMiss(SumevalError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"no cached outcome for request {key}")


class LengthMismatch(SumevalError, ValueError):
    pass


class ParseError(SumevalError):
    """Base for evaluator-transcript parse failures."""


class NonContiguousIndices(ParseError):
    pass


class DuplicateIndex(ParseError):
    pass


class ContentFiltered(SumevalError):
    """The endpoint refused the request through its content filter."""


class GenerationFailed(SumevalError):
    pass


class AnsweringFailed(SumevalError):
    """Answer transcript could not be aligned with the questions.

    ``answers`` holds whatever answers were recovered, so callers can tell a
    partial response from a garbled one.
    """

    def __init__(self, message, answers=None):
        self.answers = list(answers or [])
        super().__init__(message)


class ExtractionFailed(SumevalError):
    pass


class CheckingFailed(SumevalError):
    pass


class StageError(SumevalError):
    """A pipeline stage aborted."""

    def __init__(self, stage, message):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")
