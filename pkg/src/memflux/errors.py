"""Exception hierarchy shared by all memflux modules."""


class MemfluxError(Exception):
    """Base class for every error raised by memflux."""


class NonPositiveParameter(MemfluxError, ValueError):
    def __init__(self, name: str, value: float):
        super().__init__(f"parameter {name!r} must be positive, got {value!r}")
        self.name = name
        self.value = value


class NonFiniteParameter(MemfluxError, ValueError):
    def __init__(self, name: str, value: float):
        super().__init__(f"parameter {name!r} must be finite, got {value!r}")
        self.name = name
        self.value = value


class InvalidInitialData(MemfluxError, ValueError):
    pass


class TooFewPoints(MemfluxError, ValueError):
    pass


class NoConvergence(MemfluxError, RuntimeError):
    def __init__(self, iterations: int):
        super().__init__(f"inverse iteration did not converge in {iterations} iterations")
        self.iterations = iterations


class LinearSolveFailure(MemfluxError, RuntimeError):
    pass


class WrongRegime(MemfluxError, ValueError):
    pass


class InvalidRegime(MemfluxError, ValueError):
    pass


class NoAdmissibleEpsilon(MemfluxError, RuntimeError):
    pass


class GridMismatch(MemfluxError, ValueError):
    pass


class ExpressionSyntaxError(MemfluxError, SyntaxError):
    """Malformed expression text; ``offset`` is a byte offset into the UTF-8 source."""

    def __init__(self, offset: int, expected: str, text: str = ""):
        super().__init__(f"at offset {offset}: expected {expected}")
        self.offset = offset
        self.expected = expected
        self.text = text


class EvaluationError(MemfluxError, ArithmeticError):
    pass
