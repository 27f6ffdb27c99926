"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A run configuration is invalid or internally inconsistent."""


class ConfigValidationError(ConfigurationError):
    """Config parsing failed; carries every violation found, not just the first."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration: " + "; ".join(self.problems))


class DirichletViolationError(ValueError):
    """A field that must vanish at a wall does not (beyond tolerance)."""


class StepResolutionError(ConfigurationError):
    """Kernel-stepper time step too small for the grid spacing.

    The short-time kernel oscillates on the length sqrt(2 pi hbar dt / m);
    the piecewise-linear representation cannot resolve it below two grid
    spacings.
    """

    def __init__(self, dt: float, dt_min: float):
        self.dt = dt
        self.dt_min = dt_min
        super().__init__(
            f"time step {dt:g} under-resolves the short-time kernel on this "
            f"grid; smallest admissible dt is {dt_min:g}"
        )


class TailBoundError(RuntimeError):
    """Requested tail tolerance not attainable at the given horizon."""

    def __init__(self, bound: float, tol: float, t_max_suggested: float):
        self.bound = bound
        self.tol = tol
        self.t_max_suggested = t_max_suggested
        super().__init__(
            f"tail contribution bound {bound:.3e} exceeds tolerance {tol:.3e}; "
            f"increase t_max to about {t_max_suggested:.3g} or more"
        )


class NumericError(RuntimeError):
    """A linear solve failed where it should not be able to (defensive)."""
