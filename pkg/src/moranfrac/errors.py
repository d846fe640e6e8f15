"""Exception hierarchy shared across the package."""


class MoranError(Exception):
    """Base class for every error raised by moranfrac."""


class SpecFormatError(MoranError, ValueError):
    """A sequence spec document is structurally malformed."""


class SequenceError(MoranError, ValueError):
    """A sequence value violates an invariant, or an index is out of range."""

    def __init__(self, message, k=None, invariant=None):
        super().__init__(message)
        self.k = k
        self.invariant = invariant


class DepthError(MoranError, ValueError):
    """Prefix tables or a realization are too shallow for the request."""

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class ConstructionError(MoranError, ValueError):
    """A geometric realization cannot be built as requested."""


class BudgetError(MoranError, MemoryError):
    """A realization would exceed the interval budget."""

    def __init__(self, message, budget=None, requested=None):
        super().__init__(message)
        self.budget = budget
        self.requested = requested
