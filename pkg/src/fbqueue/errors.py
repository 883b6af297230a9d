"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested operation."""


class UnstableQueueError(DomainError):
    """The operation needs a stable queue (load below one) and did not get one."""


class VacuousBoundError(DomainError):
    """The selected exceedance bound is >= 1 and carries no information."""


class CouplingConfigError(DomainError):
    """Two service laws do not share a quantile function below the splice level."""


class SimulationTruncated(RuntimeError):
    """A simulation hit its event cap before reaching its stopping condition."""

    def __init__(self, message, events=None, clock=None):
        super().__init__(message)
        self.events = events
        self.clock = clock
