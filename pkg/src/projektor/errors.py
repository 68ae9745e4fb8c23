"""Exception hierarchy shared by all modules.

Every error carries an optional ``diagnostics`` dict so the harness can dump
machine-readable context into ``report.json``.
"""


class ProjektorError(Exception):
    code = "ERROR"

    def __init__(self, msg="", diagnostics=None):
        super().__init__(msg)
        self.diagnostics = dict(diagnostics or {})


class InputError(ProjektorError, ValueError):
    code = "INPUT_ERROR"


class EmptySubspaceError(ProjektorError):
    code = "EMPTY_SUBSPACE"


class EmptyReportError(ProjektorError):
    """Raised when the complement of the common intersection is trivial."""

    code = "EMPTY"


class PreconditionViolated(ProjektorError):
    code = "PRECONDITION_VIOLATED"


class ZeroNormError(ProjektorError, ArithmeticError):
    code = "ZERO_NORM"


class ConstructionFailed(ProjektorError):
    code = "CONSTRUCTION_FAILED"


class ChainDegraded(ProjektorError):
    code = "CHAIN_DEGRADED"

    def __init__(self, msg="", diagnostics=None, plan=None):
        super().__init__(msg, diagnostics)
        self.plan = plan
