"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid algorithm parameters or experiment configuration."""


class ContractViolation(ValueError):
    """Inputs that break an operation's preconditions (shapes, symmetry, ...)."""


class SubproblemNonconvergence(RuntimeError):
    """The cubic subproblem root finder ran out of iterations."""

    def __init__(self, message, best_residual):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


class ParseError(ValueError):
    """Malformed LIBSVM input; carries the 1-based line number."""

    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


class FormatError(ValueError):
    """A trace file does not carry the expected CSV header."""
