"""Exception hierarchy shared by all verexp modules."""


class VerExpError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(VerExpError, ValueError):
    pass


class InputShapeError(VerExpError, ValueError):
    pass


class DomainError(VerExpError, ValueError):
    """A value lies outside the protocol's declared domain (e.g. x not in range)."""


class DegenerateDistributionError(VerExpError, ArithmeticError):
    pass


class PreconditionError(VerExpError, ValueError):
    pass


class WitnessError(VerExpError):
    """Witness generation cannot satisfy a gadget precondition."""


class SetupError(VerExpError):
    pass


class ProofRefusedError(VerExpError):
    """The backend refused to prove a statement the witness does not satisfy."""


class KeyMismatchError(VerExpError):
    pass


class BackendUnavailableError(VerExpError):
    pass


class BoardError(VerExpError):
    pass


class BoardTransportError(BoardError):
    pass


class BoardIntegrityError(BoardError):
    """The persisted log no longer matches its hash chain (entries were altered)."""


class IncompleteBoardError(BoardError):
    pass


class AuditScopeError(VerExpError):
    pass


class AuditInconclusiveError(VerExpError):
    """A real-vs-rational comparison landed inside the certified interval."""


class ImpossibleEventError(VerExpError):
    """A sample landed on an outcome of exact probability zero."""


class PipelineError(VerExpError):
    def __init__(self, phase, cause):
        super().__init__(f"{phase} phase failed: {cause}")
        self.phase = phase
        self.cause = cause
