"""Exception hierarchy shared by the solvers and the command line."""


class MachlabError(Exception):
    """Base class for every error raised by machlab."""


class ConfigError(MachlabError, ValueError):
    """Invalid grid, solver or experiment configuration."""


class NumericalError(MachlabError, ArithmeticError):
    """A numerical kernel produced a singular or non-finite result."""


class CompatibilityError(NumericalError):
    """Neumann data violate the solvability condition int(rhs) = oint(bc)."""

    def __init__(self, defect, tolerance):
        self.defect = defect
        self.tolerance = tolerance
        super().__init__(
            f"incompatible Neumann data: int(rhs) - oint(bc) = {defect:.3e} "
            f"exceeds tolerance {tolerance:.3e}"
        )


class VacuumError(NumericalError):
    """Total density 1 + eps*rho fell below the non-vacuum floor."""

    def __init__(self, value, node):
        self.value = value
        self.node = node
        super().__init__(f"vacuum: 1 + eps*rho = {value:.4f} < 0.5 at node {node}")


class BlowUpError(NumericalError):
    """A time integration lost stability."""

    def __init__(self, time, growth):
        self.time = time
        self.growth = growth
        super().__init__(f"blow-up at t = {time:.6g} (norm growth {growth:.3g})")
