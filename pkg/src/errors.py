"""Exception types shared across the simulator."""


class DomainError(ValueError):
    """Physical or mathematical input outside the model's domain."""


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GuardrailError(ConfigError):
    """Problem dimensions exceed what the dense solver accepts."""


class InfeasibleError(ValueError):
    """No feasible point exists for the requested constraint family."""

    def __init__(self, message: str, constraint: str | None = None):
        self.constraint = constraint
        super().__init__(message)
