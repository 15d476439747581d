"""Exception types shared across the toolkit."""


class FeaslabError(Exception):
    pass


class DimensionMismatch(FeaslabError, ValueError):
    """Arguments live in different ambient dimensions."""


class InvalidSet(FeaslabError, ValueError):
    """Set parameters violate a construction invariant."""


class SolverFailure(FeaslabError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    ``achieved`` carries the best residual (or cycle displacement) seen.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved
