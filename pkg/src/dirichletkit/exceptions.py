class DomainError(ValueError):
    """An argument lies outside the domain of a density, transform or function."""


class EstimationError(RuntimeError):
    """An estimator could not produce a valid estimate (degenerate data, divergence)."""


class CalibrationError(EstimationError):
    """The proposal-scale scan found no crossing."""


class IngestError(ValueError):
    """Malformed input data. ``row`` and ``column`` are 1-based file positions when known."""

    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.row = row
        self.column = column


class SmallParameterWarning(UserWarning):
    """Some parameter is below one, so the density is unbounded at the simplex boundary."""


class AcceptanceRateWarning(UserWarning):
    """Metropolis-Hastings acceptance rate fell outside [0.15, 0.6]."""


class ConvergenceWarning(UserWarning):
    """An iterative procedure stopped before meeting its convergence check."""
