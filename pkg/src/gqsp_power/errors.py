"""Exception hierarchy. The CLI maps these onto exit codes 1/2/3."""


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        self.line = line
        prefix = f"line {line}: " if line else ""
        super().__init__(prefix + message)


class ResourceError(RuntimeError):
    """A dense realization would exceed the configured qubit cap."""


class NumericalError(RuntimeError):
    """Base for tolerance breaches in completion, carving or verification."""


class NeedsRescaleError(NumericalError):
    """|P| touches 1 on the unit circle, so 1/(1-|P|^2) is singular."""


class IllConditionedError(NumericalError):
    """The Prony null space is not one-dimensional to working precision."""


class CompletionError(NumericalError):
    pass


class InconsistentPairError(NumericalError):
    """(P, Q) is not a valid complementary pair, carving cannot proceed."""


class CapitalizationError(ValueError):
    def __init__(self, message: str, suggested_beta: float | None = None):
        self.suggested_beta = suggested_beta
        super().__init__(message)


class ZeroProbabilityError(RuntimeError):
    """Post-selection onto a subspace with (numerically) zero weight."""


class SingularShiftError(ValueError):
    pass
