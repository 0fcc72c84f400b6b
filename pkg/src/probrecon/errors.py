"""Exception types shared across the package."""

import numpy as np


class ValidationError(ValueError):
    """Malformed input: bad hierarchy document, missing series, wrong shapes."""


class NumericalError(np.linalg.LinAlgError):
    """A linear-algebra step failed (singular or indefinite matrix).

    ``condition`` carries the 2-norm condition estimate of the offending
    matrix when one is available.
    """

    def __init__(self, message, condition=None):
        if condition is not None:
            message = f"{message} (condition number ~ {condition:.3e})"
        super().__init__(message)
        self.condition = condition
