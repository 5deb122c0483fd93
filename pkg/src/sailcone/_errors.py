from __future__ import annotations


class SailconeError(Exception):
    """Root of every error raised deliberately by ``sailcone``."""


class DomainError(SailconeError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DegeneratePathError(DomainError):
    def __init__(self, node: int, sp12: float) -> None:
        self.node = node
        self.sp12 = sp12
        super().__init__(f"path derivative vanishes at node {node} (s'12 = {sp12:.3e})")


class InfeasibleDirectionError(DomainError):
    """A quadratic-over-linear term was evaluated at a zero denominator with a nonzero numerator."""


class ConfigurationError(SailconeError, ValueError):
    pass


class FitError(SailconeError):
    def __init__(self, message: str, diagnostics: dict[str, float] | None = None) -> None:
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class MissionError(SailconeError, ValueError):
    pass


class ScenarioError(SailconeError, ValueError):
    def __init__(self, field_path: str, message: str, invariant: str | None = None) -> None:
        self.field_path = field_path
        self.invariant = invariant
        prefix = f"{field_path}: " if field_path else ""
        suffix = f" [invariant: {invariant}]" if invariant else ""
        super().__init__(f"{prefix}{message}{suffix}")


class IntegrationError(SailconeError):
    pass


class OracleInfeasibleError(SailconeError):
    pass
