"""Exception hierarchy shared by all modules."""


class BellFacetsError(Exception):
    pass


class InvalidScenario(BellFacetsError, ValueError):
    pass


class NonBinaryScenario(BellFacetsError, ValueError):
    pass


class ShapeMismatch(BellFacetsError, ValueError):
    pass


class Infeasible(BellFacetsError):
    pass


class Unbounded(BellFacetsError):
    pass


class DegenerateConstantVector(BellFacetsError, ValueError):
    pass


class TooLarge(BellFacetsError, ValueError):
    pass


class EtaOutOfRange(BellFacetsError, ValueError):
    pass


class SnapVerificationFailed(BellFacetsError):
    """Snapped threshold failed exact verification; ``bracket`` holds the raw ``(lo, hi)``."""

    def __init__(self, message, bracket):
        super().__init__(message)
        self.bracket = bracket


class SolverUnavailable(BellFacetsError):
    pass


class SolverFailed(BellFacetsError):
    def __init__(self, status, message=""):
        super().__init__(message or f"solver failed with status {status!r}")
        self.status = status


class UnknownVariable(BellFacetsError, KeyError):
    pass


class ParseError(BellFacetsError, ValueError):
    def __init__(self, message, raw=""):
        super().__init__(message)
        self.raw = raw
