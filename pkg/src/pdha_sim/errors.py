"""Exception types shared across the package."""


class PdhaError(Exception):
    """Base class for all package-specific errors."""


class PartitionError(PdhaError, ValueError):
    """A region set does not partition the domain, or a grid point is
    covered by zero or multiple regions."""


class UnsupportedCombinationError(PdhaError, ValueError):
    """A boundary condition or scheme combination that has no defined
    meaning (e.g. outflow ghosts with a second-difference stencil)."""


class StepSizeError(PdhaError, ValueError):
    """A time step that violates a stability or commensurability
    requirement (CFL bound, non-integer cell hops)."""


class DivergenceError(PdhaError, RuntimeError):
    """The integrated field left the finite range."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class ValidationError(PdhaError, ValueError):
    """An automaton failed structural validation. Carries the full report."""

    def __init__(self, report):
        self.report = list(report)
        super().__init__("automaton validation failed:\n" + "\n".join(f"  - {r}" for r in self.report))


class ModelFileError(PdhaError, ValueError):
    """A model file failed to parse or failed semantic checks. Carries
    every violation found, not just the first."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid model file:\n" + "\n".join(f"  - {p}" for p in self.problems))
