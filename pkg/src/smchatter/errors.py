"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class SingularityError(ArithmeticError):
    """A rational expression was evaluated at a pole or a zero divisor."""


class StabilityViolationError(DomainError):
    """LSV/TSV loop queried at mu >= 1/(2b), where no chattering limit cycle exists."""

    def __init__(self, mu, bound):
        self.mu = mu
        self.bound = bound
        super().__init__(
            f"mu={mu:g} violates the stability condition 2*b*mu < 1 "
            f"(bound 1/(2b) = {bound:.9g})")


class DivergenceError(RuntimeError):
    """A simulated trajectory left the divergence threshold."""

    def __init__(self, diverged_at):
        self.diverged_at = diverged_at
        super().__init__(f"trajectory diverged at t={diverged_at:g} s")


class WindowError(ValueError):
    """A measurement window is too short or holds too few oscillation cycles."""


class NoCrossingError(ValueError):
    """The compared metrics do not change sign over the requested bracket."""

    def __init__(self, message, lo_value, hi_value):
        self.lo_value = lo_value
        self.hi_value = hi_value
        super().__init__(message)
