"""Exception types shared across the package."""

from __future__ import annotations


class RequireCegError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(RequireCegError):
    """A feature file violates the Gherkin grammar."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


class InvariantError(RequireCegError):
    """A document or graph value violates one of its structural invariants."""


class DslSyntaxError(RequireCegError):
    """A causal-graph statement cannot be tokenized or structurally parsed."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


class IncompleteAssignment(RequireCegError):
    """A truth assignment is missing a value for a declared condition."""


class TooManyConditions(RequireCegError):
    """A graph exceeds the exhaustive-enumeration cap."""


class EmptyCorpus(RequireCegError):
    """An aggregate metric was requested over zero inputs."""


class EmptyText(RequireCegError):
    """Readability was requested for text with no words."""


class EmptyInput(RequireCegError):
    """Diversity was requested over an empty feature list."""


class OracleFailure(RequireCegError):
    """The text-generation oracle failed at the transport or format level."""


class TreeValidationFailure(RequireCegError):
    """The oracle could not produce a valid feature tree after a reprompt."""


class AtomValidationFailure(RequireCegError):
    """The oracle could not produce valid atomic nodes after a reprompt."""


class DraftParseFailure(RequireCegError):
    """The oracle could not produce a parseable draft feature after a reprompt."""


class FormalLoopExhausted(RequireCegError):
    """Formal errors persisted through the maximum number of repair rounds."""


class LabelFileMissing(RequireCegError):
    """Coverage ratios were requested without a human-judgment label file."""
