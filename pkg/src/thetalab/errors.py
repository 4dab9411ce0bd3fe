"""Exception taxonomy shared by all modules.

Domain errors are violations of mathematical preconditions (e.g. a zero
increment target), contract errors are misuse of an API surface, capacity
errors are requests beyond configured limits, and infeasibility carries a
certificate naming the contradicting constraints.
"""


class DomainError(ValueError):
    """A mathematical precondition is violated."""


class ContractError(ValueError):
    """An API contract is violated (bad shapes, overlapping intervals, ...)."""


class CapacityError(ValueError):
    """A configurable capacity limit is exceeded."""


class InfeasibleError(RuntimeError):
    """A constrained program admits no feasible point."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate
