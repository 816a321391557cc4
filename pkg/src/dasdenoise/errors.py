"""Shared exception types."""


class NumericError(RuntimeError):
    """An iterative numeric procedure failed (divergence or non-convergence).

    ``iteration`` carries the failing iteration index when the failure
    occurred inside an optimization loop, else ``None``.
    """

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration
