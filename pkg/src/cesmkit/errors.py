"""Exception types shared across the toolkit."""


class CesmError(Exception):
    """Base class for all toolkit errors."""


class LexiconLoadError(CesmError):
    """A lexicon file could not be loaded."""

    def __init__(self, reason, line=None):
        self.reason = reason
        self.line = line
        loc = f" (line {line})" if line is not None else ""
        super().__init__(f"{reason}{loc}")


class DuplicateGlyphError(LexiconLoadError):
    def __init__(self, glyph, line=None):
        self.glyph = glyph
        super().__init__(f"duplicate glyph {glyph!r}", line=line)


class InvalidChanceError(LexiconLoadError):
    def __init__(self, value, line=None):
        self.value = value
        super().__init__(
            f"invalid chance level {value!r} (expected Low, Medium, or High)",
            line=line,
        )


class MultiGraphemeError(CesmError):
    """A lookup key was not a single grapheme cluster."""


class CorpusLoadError(CesmError):
    """A corpus file could not be loaded in strict mode.

    ``violations`` holds (line, field, reason) triples for every problem
    found, not just the first.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        head = "; ".join(
            f"line {ln}: {field}: {reason}" for ln, field, reason in self.violations[:5]
        )
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"{len(self.violations)} schema violation(s): {head}{more}")


class InsufficientPostsError(CesmError):
    """A split would leave one side empty."""


class EmptySelectionError(CesmError):
    """A perturbation found no emoji-bearing posts to modify."""


class InsufficientExemplarsError(CesmError):
    def __init__(self, category, needed, available):
        self.category = category
        super().__init__(
            f"need {needed} exemplar(s) of kind {category!r}, only {available} available"
        )


class MissingPredictionError(CesmError):
    """A rationale prompt was requested without a prediction."""


class MissingBodyError(CesmError):
    """A prompt was requested for a post with an empty body."""


class EmptyExemplarsError(CesmError):
    """A few-shot prompt was requested with no exemplars."""


class LengthMismatchError(CesmError):
    """Paired inputs have different lengths."""


class EmptyInputError(CesmError):
    """A metric was called on empty input."""


class ZeroVarianceError(CesmError):
    """All paired differences are equal; the t statistic is undefined."""


class EmptyTextError(CesmError):
    """Readability was requested for blank text."""


class DegenerateDistributionError(CesmError):
    """All ratings fall in one category; kappa is undefined."""


class MisalignedIdsError(CesmError):
    """Annotators do not cover the same set of post ids."""


class EmbedderFailure(CesmError):
    """An embedding provider raised; original error attached as __cause__."""


class UnparseableError(CesmError):
    """No parse route recovered a prediction from a completion."""


class RetriesExhaustedError(CesmError):
    def __init__(self, attempts, last_error):
        self.attempts = attempts
        self.last_error = last_error
        super().__init__(f"request failed after {attempts} attempt(s): {last_error}")


class HttpBackendError(CesmError):
    def __init__(self, status, body=""):
        self.status = status
        super().__init__(f"backend returned HTTP {status}")


class PipelineStageError(CesmError):
    """Wraps an error with the pipeline stage it occurred in."""

    def __init__(self, stage, error):
        self.stage = stage
        self.error = error
        super().__init__(f"[{stage}] {error}")
