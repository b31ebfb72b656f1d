"""Exception types shared across the package."""

from __future__ import annotations


class P2CError(Exception):
    """Base class for all errors raised by this package."""


class RuleSyntaxError(P2CError):
    """Malformed rule text. Carries 1-based line/column of the offending token."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class RuleProgramError(P2CError):
    """Structurally invalid rule program (stratification, heads, references)."""


class EvaluationError(P2CError):
    """A rule referenced something the state or program cannot supply."""


class ConfigError(P2CError):
    """Invalid dataset configuration or config/rules cross-reference failure."""


class StateValidationError(P2CError):
    """A raw assignment does not describe a member of the state space."""


class CausalProgramError(P2CError):
    """Contradictory causal entailments (two alternatives fired for one feature)."""


class InconsistentInitialStateError(P2CError):
    """Initial state violates the causal rules and repair was not requested."""


class AlreadyCounterfactualError(P2CError):
    """Initial state is already in the goal set; there is nothing to search for."""


class NoCounterfactualError(P2CError):
    """The goal set is empty within the admissible candidate space."""


class SearchExhaustedError(P2CError):
    """Backtracking search emptied its ledger without reaching a goal."""

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class SpaceTooLargeError(P2CError):
    """Brute-force oracle refused to enumerate a space above its cap."""


class PredictorError(P2CError):
    """An external or table predictor failed on a specific row."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row
