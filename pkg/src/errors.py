"""
Exception hierarchy for the real Donaldson lab.

Every failure a run can hit maps to one of these classes. The CLI turns
ConfigError into exit code 2 and CertificationFailure into exit code 1;
anything else aborts the run with its id.
"""


class DonaldsonLabError(Exception):
    """Base class for all lab errors."""


class ConfigError(DonaldsonLabError):
    """Invalid experiment configuration (exit code 2)."""


class DomainError(DonaldsonLabError):
    """Point or parameter outside the model's domain."""


class ResolutionError(DonaldsonLabError):
    """Grid too coarse for the requested estimate."""

    def __init__(self, message: str, hint: str = ''):
        super().__init__(f"{message} ({hint})" if hint else message)
        self.hint = hint


class DegenerateVertexError(DonaldsonLabError):
    """A grid vertex sits (numerically) on the zero set."""

    def __init__(self, message: str, vertex=None):
        super().__init__(message)
        self.vertex = vertex


class NoAdmissibleW(DonaldsonLabError):
    """The forbidden trace covers all of [-delta, delta]."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class NoAdmissiblePath(DonaldsonLabError):
    """No connected admissible path through the (t, w) grid."""

    def __init__(self, message: str, bottleneck_t: float = None):
        super().__init__(message)
        self.bottleneck_t = bottleneck_t


class SardFailure(DonaldsonLabError):
    """Sard picking failed on a specific ball of the recursion."""

    def __init__(self, message: str, ball_id=None, cause: Exception = None):
        super().__init__(f"ball {ball_id}: {message}")
        self.ball_id = ball_id
        self.cause = cause


class BudgetExhausted(DonaldsonLabError):
    """Cumulative perturbation exceeded the allowed budget."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class SymmetryError(DonaldsonLabError):
    """Input section is not kappa-symmetric."""

    def __init__(self, message: str, certificate: float = None):
        super().__init__(message)
        self.certificate = certificate


class PairTransversalityError(DonaldsonLabError):
    """The pair s0 + s1 fails rank-2 transversality."""

    def __init__(self, message: str, witness=None, margin: float = None):
        super().__init__(message)
        self.witness = witness
        self.margin = margin


class NonIsolatedCriticalSet(DonaldsonLabError):
    """Newton census converged onto a curve of critical points."""


class CertificationFailure(DonaldsonLabError):
    """A pencil certificate failed (exit code 1)."""

    def __init__(self, message: str, item: int = None):
        super().__init__(f"item {item}: {message}" if item is not None else message)
        self.item = item


class RunAborted(DonaldsonLabError):
    """A sub-run of a sweep failed; carries the run id."""

    def __init__(self, run_id: str, cause: Exception):
        super().__init__(f"run {run_id} aborted: {type(cause).__name__}: {cause}")
        self.run_id = run_id
        self.cause = cause
