"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so the CLI can emit
structured error JSON on stderr.
"""


class AoiPreemptError(Exception):
    code = "error"


class EmptyOrNegativePmf(AoiPreemptError, ValueError):
    code = "empty_or_negative"


class ZeroFirstSlot(AoiPreemptError, ValueError):
    code = "zero_first_slot"


class UnnormalizedPmf(AoiPreemptError, ValueError):
    code = "unnormalized"


class OutOfSupport(AoiPreemptError, IndexError):
    code = "out_of_support"


class KSmallerThanL(AoiPreemptError, ValueError):
    code = "k_smaller_than_l"


class InfeasibleAction(AoiPreemptError, ValueError):
    code = "infeasible_action"


class StateOutsideGrid(AoiPreemptError, ValueError):
    code = "state_outside_grid"


class InvalidThresholds(AoiPreemptError, ValueError):
    code = "invalid_thresholds"


class NoConvergence(AoiPreemptError, RuntimeError):
    code = "no_convergence"

    def __init__(self, message: str, iterations: int | None = None,
                 residual: float | None = None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class NonErgodicChain(AoiPreemptError, RuntimeError):
    code = "non_ergodic_chain"


class HorizonTooShort(AoiPreemptError, ValueError):
    code = "horizon_too_short"
