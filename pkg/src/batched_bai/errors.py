"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a reward family or formula."""


class PreconditionError(ValueError):
    """A documented precondition of an operation was violated."""


class RangeError(ValueError):
    """A target value is unreachable (e.g. at or past an asymptote)."""


class DegenerateInstanceError(ValueError):
    """The instance has no unique best arm, so T* is infinite."""


class UndefinedStatisticError(ValueError):
    """A statistic was requested for arms without enough observations."""


class CapabilityError(ValueError):
    """The requested operation is not supported for this input size or family."""


class ConfigurationError(ValueError):
    """An experiment or CLI configuration is invalid."""


class EnvironmentExhausted(RuntimeError):
    """A batch would exceed the environment's pull cap.

    Carries the accounting at the moment the batch was refused.
    """

    def __init__(self, message: str, samples: int, batches: int):
        super().__init__(message)
        self.samples = samples
        self.batches = batches
