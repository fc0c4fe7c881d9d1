"""Exception hierarchy shared by all modules."""


class MomentForgeError(Exception):
    """Base class for every error raised by momentforge."""


class InvalidInstance(MomentForgeError, ValueError):
    """Malformed law, direction set or instance."""


class DomainError(MomentForgeError, ValueError):
    """Exponent outside the supported range p >= 2."""


class DegenerateRatio(MomentForgeError, ArithmeticError):
    """Weak moment vanished while the strong moment did not."""


class SolverStall(MomentForgeError, RuntimeError):
    """Dual-norm restarts disagree beyond tolerance."""


class ReconstructionMismatch(MomentForgeError, ArithmeticError):
    """A factorization failed to reproduce its target matrix."""


class StepViolation(MomentForgeError, ArithmeticError):
    """A certificate step inequality failed beyond tolerance."""

    def __init__(self, name, lhs, rhs):
        super().__init__(f"step {name!r} violated: lhs={lhs!r} > rhs={rhs!r}")
        self.name = name
        self.lhs = lhs
        self.rhs = rhs


class AllZeroInstance(MomentForgeError, ValueError):
    """Every pairing <t_i, x_j> vanishes, so the reweighting is undefined."""
