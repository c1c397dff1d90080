"""Exception types shared across the package."""


class WordLraError(Exception):
    """Base class for all library errors."""


class CorpusError(WordLraError):
    """A corpus source could not be read."""

    def __init__(self, path, reason):
        self.path = str(path)
        self.reason = str(reason)
        super().__init__(f"cannot read corpus '{self.path}': {self.reason}")


class EmptyVocabularyError(WordLraError):
    """No word survived the frequency threshold."""


class ConsistencyError(WordLraError):
    """Internal invariants of a data structure are violated."""


class ParseError(WordLraError):
    """A data file is malformed."""

    def __init__(self, path, line, reason):
        self.path = str(path)
        self.line = line
        self.reason = str(reason)
        super().__init__(f"{self.path}:{line}: {self.reason}")


class ConvergenceError(WordLraError):
    """An iterative solver hit its iteration cap before converging."""

    def __init__(self, message, residual=None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (achieved residual bound {residual:.3e})"
        super().__init__(message)


class RankDeficiencyError(WordLraError):
    """A factorization found a numerically zero pivot before the requested rank."""

    def __init__(self, requested, achieved):
        self.requested = requested
        self.achieved = achieved
        super().__init__(
            f"matrix is numerically rank deficient: requested rank {requested}, "
            f"achieved {achieved}"
        )


class NumericalError(WordLraError):
    """A numerical update produced non-finite values."""


class InsufficientDataError(WordLraError):
    """Too few usable observations to compute a score."""


class OutOfVocabularyError(WordLraError):
    """A query word is not in the embedding vocabulary."""

    def __init__(self, words):
        self.words = tuple(words)
        super().__init__("out-of-vocabulary word(s): " + ", ".join(self.words))


class UndefinedCorrelationError(WordLraError):
    """Rank correlation is undefined because one input has zero rank variance."""


class DesignError(WordLraError):
    """The observation layout is not a balanced factorial design."""
