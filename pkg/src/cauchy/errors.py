"""
Exceptions raised by the numerical core.

Plain precondition violations use ValueError; the classes below mark the two
failure modes callers are expected to handle separately.
"""


class OverflowGuardError(ValueError):
    """Raised when a plain-space growth factor would exceed the double range."""


class PicardConvergenceError(RuntimeError):
    """
    Raised when Picard iteration does not reach its tolerance.

    Attributes:
        iterations (int): Number of sweeps performed.
        residual (float): Relative sup-norm change of the last sweep.
    """

    def __init__(self, iterations: int, residual: float, tol: float):
        self.iterations = iterations
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"Picard iteration did not converge after {iterations} sweeps: "
            f"residual {residual:.3e} > tol {tol:.3e}"
        )
