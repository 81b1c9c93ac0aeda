class DataError(ValueError):
    """Malformed record, label or model input."""


class EstimationError(ValueError):
    """An estimator is undefined for the given input (e.g. p = 0)."""


class BudgetExhausted(RuntimeError):
    """The edge-query budget ran out during a batch of queries."""
