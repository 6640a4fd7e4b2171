"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or out-of-contract input (bad labels, dimensions, ranges)."""


class RegimeError(RuntimeError):
    """The requested computation does not apply in the configured budget regime."""


class NonexistenceError(RegimeError):
    """No signaling game equilibrium exists for the given parameters.

    Carries the thresholds that place the instance in the non-existence
    region so callers can render the offending budget range.
    """

    def __init__(self, message, budget=None, threshold_two_type=None,
                 threshold_general=None):
        super().__init__(message)
        self.budget = budget
        self.threshold_two_type = threshold_two_type
        self.threshold_general = threshold_general
