"""
Forward propagation of Cauchy data through the mild-solution formula.

Each mode p obeys the Volterra form

    u_p(x) = C_p(x) u0_p + V_p(x) u1_p + int_0^x K_p(x - xi) f_p(xi) dxi,

with (C, V, K) = (cosh, sinh / sqrt_l, sinh / sqrt_l) for the exact solution
and (sqrt_l sinh, cosh, cosh) for its x-derivative. The integral is a
composite trapezoid on a uniform x-grid, evaluated as a causal convolution,
and the semilinear forcing f_p = <f(u), phi_p> is computed pseudo-spectrally
on a Gauss-Legendre grid. Nonlinear cases are solved by Picard iteration.

The module also exposes the weighted combination
e^{sqrt_l (a - x)} (u_p + u_x,p / sqrt_l), which is x-independent when f = 0,
and a factory of manufactured cases with reference trajectories.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from src.cauchy import logspace
from src.cauchy.errors import OverflowGuardError, PicardConvergenceError
from src.cauchy.nonlinearity import Nonlinearity, NonlinearityKind
from src.cauchy.spectral import (
    CoefficientVector,
    SpectralBasis,
    TensorGrid,
    eigenfunction_table,
    quadrature_order,
)
from src.config.config import (
    OVERFLOW_GUARD,
    PICARD_MAX_ITERS,
    PICARD_TOL,
    REFERENCE_REFINEMENT,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    A function on Omega stored as coefficients on a uniform x-grid.

    Attributes:
        xs (np.ndarray): (Nx+1,) uniform nodes 0 = x_0 < ... < x_Nx = a.
        values (np.ndarray): (Nx+1, P) coefficients, row i is u(x_i, .).
        basis (SpectralBasis): Basis of the coefficients.
        iterations (int): Picard sweeps that produced it (0 when linear).
        residual (float): Last Picard residual.
        residuals (Tuple[float, ...]): Residual of every Picard sweep, in order.
    """

    xs: np.ndarray
    values: np.ndarray
    basis: SpectralBasis
    iterations: int = 0
    residual: float = 0.0
    residuals: Tuple[float, ...] = ()

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "values", values)
        a = self.basis.domain.a
        if xs.ndim != 1 or xs.size < 2:
            raise ValueError("Trajectory needs at least two x-nodes")
        if xs[0] != 0.0 or not math.isclose(xs[-1], a, rel_tol=1e-12):
            raise ValueError(f"x-grid must span [0, {a}], got [{xs[0]}, {xs[-1]}]")
        if not np.allclose(np.diff(xs), a / (xs.size - 1), rtol=1e-9, atol=0.0):
            raise ValueError("x-grid must be uniform")
        if values.shape != (xs.size, self.basis.P):
            raise ValueError(
                f"Values of shape {values.shape} do not match "
                f"({xs.size}, {self.basis.P})"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("Trajectory contains non-finite coefficients")

    @property
    def nx(self) -> int:
        """Number of x-intervals."""
        return self.xs.size - 1

    @property
    def h(self) -> float:
        """Uniform x-spacing."""
        return self.basis.domain.a / self.nx

    def at(self, i: int) -> CoefficientVector:
        """Coefficients at node i."""
        return CoefficientVector(self.values[i], self.basis)

    @property
    def at_end(self) -> CoefficientVector:
        """Coefficients at x = a."""
        return self.at(-1)

    def scaled(self, factor: float) -> "Trajectory":
        """Trajectory with every coefficient multiplied by factor."""
        return replace(self, values=factor * self.values)

    def subsampled(self, stride: int) -> "Trajectory":
        """Every stride-th node; Nx must be divisible by stride."""
        if self.nx % stride:
            raise ValueError(f"Nx = {self.nx} is not divisible by {stride}")
        return replace(
            self, xs=self.xs[::stride].copy(), values=self.values[::stride].copy()
        )


@dataclass(frozen=True, eq=False)
class CauchyData:
    """Cauchy data u(0, .) = u0 and u_x(0, .) = u1."""

    u0: CoefficientVector
    u1: CoefficientVector

    def __post_init__(self):
        if self.u0.basis is not self.u1.basis:
            raise ValueError("u0 and u1 must share a basis")

    @property
    def basis(self) -> SpectralBasis:
        """Basis shared by both components."""
        return self.u0.basis

    @classmethod
    def zero_like(cls, basis: SpectralBasis) -> "CauchyData":
        """Homogeneous data."""
        return cls(CoefficientVector.zeros(basis), CoefficientVector.zeros(basis))


@dataclass(frozen=True)
class PicardControls:
    """
    Controls of the Picard sweep for the semilinear term.

    Attributes:
        max_iters (int): Maximum number of sweeps.
        tol (float): Relative sup-norm change that counts as converged.
        y_grid (Optional[TensorGrid]): Grid for the pseudo-spectral f(u);
            None selects forcing_grid(basis).
    """

    max_iters: int = PICARD_MAX_ITERS
    tol: float = PICARD_TOL
    y_grid: Optional[TensorGrid] = field(default=None, compare=False)

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")


@dataclass(frozen=True, eq=False)
class Propagator:
    """
    Growth factors of one mild-solution formula on the uniform grid.

    Attributes:
        position (np.ndarray): (Nx+1, P) factor multiplying u0_p.
        velocity (np.ndarray): (Nx+1, P) factor multiplying u1_p.
        kernel (np.ndarray): (Nx+1, P) lag kernel K_p(x_m) of the forcing.
    """

    position: np.ndarray
    velocity: np.ndarray
    kernel: np.ndarray


@dataclass(frozen=True, eq=False)
class WeightedCombo:
    """
    w_p(x_i) = e^{sqrt_l (a - x_i)} (u_p(x_i) + u_x,p(x_i) / sqrt_l) in log space.

    Attributes:
        sign (np.ndarray): (Nx+1, P) signs.
        log_abs (np.ndarray): (Nx+1, P) log-magnitudes.
    """

    sign: np.ndarray
    log_abs: np.ndarray

    def to_array(self) -> np.ndarray:
        """Plain values; entries past the double range become +-inf."""
        return logspace.to_linear(self.log_abs, self.sign)


@dataclass(frozen=True, eq=False)
class ManufacturedCase:
    """
    Cauchy data together with oracle trajectories.

    Attributes:
        case_id (str): Name used in reports.
        kind (str): Factory kind that produced the case.
        data (CauchyData): Exact Cauchy data.
        nonlinearity (Nonlinearity): Forcing on the case grid.
        u_ref (Trajectory): Reference solution u.
        ux_ref (Trajectory): Reference derivative u_x.
    """

    case_id: str
    kind: str
    data: CauchyData
    nonlinearity: Nonlinearity
    u_ref: Trajectory
    ux_ref: Trajectory

    @property
    def basis(self) -> SpectralBasis:
        """Basis of the case."""
        return self.data.basis

    @property
    def xs(self) -> np.ndarray:
        """x-grid of the references."""
        return self.u_ref.xs


def uniform_grid(a: float, nx: int) -> np.ndarray:
    """
    Uniform x-grid on [0, a].

    Args:
        a (float): Extent of Omega_x.
        nx (int): Number of intervals.

    Returns:
        np.ndarray: nx + 1 nodes.
    """
    if nx < 1:
        raise ValueError(f"Nx must be >= 1, got {nx}")
    return np.linspace(0.0, a, nx + 1)


def forcing_grid(basis: SpectralBasis) -> TensorGrid:
    """Gauss-Legendre grid for f(u) resolving twice the largest sine index."""
    orders = [quadrature_order(2 * m) for m in basis.max_index]
    return TensorGrid.gauss_legendre(basis.domain, orders)


def _check_overflow_guard(basis: SpectralBasis, guard: float = OVERFLOW_GUARD):
    exponent = float(basis.sqrt_eigenvalues[-1] * basis.domain.a)
    if exponent > guard:
        raise OverflowGuardError(
            f"sqrt(lambda_P) * a = {exponent:.1f} exceeds the overflow guard {guard}"
        )


def exact_propagator(basis: SpectralBasis, xs: np.ndarray) -> Propagator:
    """
    Factors (cosh, sinh / sqrt_l, sinh / sqrt_l) of the mild solution.

    Raises:
        OverflowGuardError: If sqrt(lambda_P) * a exceeds the guard.
    """
    _check_overflow_guard(basis)
    sqrt_l = basis.sqrt_eigenvalues
    arg = np.outer(xs, sqrt_l)
    sinh_over = np.sinh(arg) / sqrt_l
    return Propagator(np.cosh(arg), sinh_over, sinh_over)


def derivative_propagator(basis: SpectralBasis, xs: np.ndarray) -> Propagator:
    """
    Factors (sqrt_l sinh, cosh, cosh) of the x-derivative.

    Raises:
        OverflowGuardError: If sqrt(lambda_P) * a exceeds the guard.
    """
    _check_overflow_guard(basis)
    sqrt_l = basis.sqrt_eigenvalues
    arg = np.outer(xs, sqrt_l)
    cosh = np.cosh(arg)
    return Propagator(sqrt_l * np.sinh(arg), cosh, cosh)


def volterra_trapezoid(kernel: np.ndarray, forcing: np.ndarray, h: float) -> np.ndarray:
    """
    Composite trapezoid of int_0^{x_i} K(x_i - xi) g(xi) dxi on a uniform grid.

    Args:
        kernel (np.ndarray): (Nx+1, P) lag kernel K_p(m h).
        forcing (np.ndarray): (Nx+1, P) samples g_p(x_j).
        h (float): Grid spacing.

    Returns:
        np.ndarray: (Nx+1, P) integrals; row 0 is zero.
    """
    n_nodes, n_modes = forcing.shape
    out = np.zeros((n_nodes, n_modes))
    for p in range(n_modes):
        full = np.convolve(kernel[:, p], forcing[:, p])[:n_nodes]
        ends = 0.5 * (kernel[:, p] * forcing[0, p] + kernel[0, p] * forcing[:, p])
        out[:, p] = h * (full - ends)
    out[0] = 0.0
    return out


def forcing_coefficients(
    f: Nonlinearity,
    values: np.ndarray,
    grid: TensorGrid,
    table: np.ndarray,
) -> np.ndarray:
    """
    Pseudo-spectral coefficients <f(u(x_i, .)), phi_p> + F_p(x_i).

    Args:
        f (Nonlinearity): Forcing term.
        values (np.ndarray): (Nx+1, P) coefficients of u.
        grid (TensorGrid): Quadrature grid for the projection.
        table (np.ndarray): (G, P) eigenfunction table on that grid.

    Returns:
        np.ndarray: (Nx+1, P) forcing coefficients.
    """
    if f.is_pointwise_zero:
        coeffs = np.zeros_like(values)
    else:
        samples = values @ table.T
        coeffs = (f(samples) * grid.flat_weights) @ table
    if f.source is not None:
        if f.source.values.shape != values.shape:
            raise ValueError("Source term does not match the trajectory grid")
        coeffs = coeffs + f.source.values
    return coeffs


def forcing_trajectory(
    f: Nonlinearity,
    u: Trajectory,
    controls: Optional[PicardControls] = None,
) -> Trajectory:
    """
    The forcing f_p(x_i) evaluated along a trajectory.

    Args:
        f (Nonlinearity): Forcing term.
        u (Trajectory): Solution trajectory.
        controls (Optional[PicardControls]): Supplies the y-grid.

    Returns:
        Trajectory: Coefficients of f(x, ., u(x, .)).
    """
    controls = controls or PicardControls()
    grid = controls.y_grid or forcing_grid(u.basis)
    table = eigenfunction_table(u.basis, grid)
    return Trajectory(u.xs, forcing_coefficients(f, u.values, grid, table), u.basis)


def _relative_change(new: np.ndarray, old: np.ndarray) -> float:
    scale = float(np.max(np.abs(new)))
    diff = float(np.max(np.abs(new - old)))
    if scale == 0.0:
        return diff
    return diff / scale


def solve_mild(
    data: CauchyData,
    f: Nonlinearity,
    basis: SpectralBasis,
    xs: np.ndarray,
    controls: PicardControls,
    propagator: Propagator,
    mode_mask: Optional[np.ndarray] = None,
) -> Trajectory:
    """
    Picard iteration for u = C u0 + V u1 + int K(x - xi) f(u(xi)) dxi.

    The initial guess is the f = 0 trajectory. Sweeps stop once the relative
    sup-norm change over all nodes and modes is at most controls.tol.

    Args:
        data (CauchyData): Data entering the position/velocity terms.
        f (Nonlinearity): Forcing term.
        basis (SpectralBasis): Eigenbasis.
        xs (np.ndarray): Uniform x-grid.
        controls (PicardControls): Iteration controls.
        propagator (Propagator): Growth factors of the formula.
        mode_mask (Optional[np.ndarray]): (P,) 0/1 weights zeroing modes
            beyond a truncation.

    Returns:
        Trajectory: The converged trajectory.

    Raises:
        PicardConvergenceError: If tol is not reached within max_iters.
    """
    mask = np.ones(basis.P) if mode_mask is None else np.asarray(mode_mask, dtype=float)
    free = mask * (
        propagator.position * data.u0.coeffs + propagator.velocity * data.u1.coeffs
    )
    if f.is_zero:
        return Trajectory(xs, free, basis)

    h = basis.domain.a / (len(xs) - 1)
    grid = controls.y_grid or forcing_grid(basis)
    table = eigenfunction_table(basis, grid)

    def sweep(current: np.ndarray) -> np.ndarray:
        forcing = mask * forcing_coefficients(f, current, grid, table)
        return free + volterra_trapezoid(propagator.kernel, forcing, h)

    if f.is_pointwise_zero:
        # forcing independent of u: one pass is exact
        return Trajectory(xs, sweep(free), basis, iterations=1)

    current = free
    residual = math.inf
    history = []
    for iteration in range(1, controls.max_iters + 1):
        updated = sweep(current)
        residual = _relative_change(updated, current)
        history.append(residual)
        current = updated
        logger.debug(f"Picard sweep {iteration}: residual {residual:.3e}")
        if not np.all(np.isfinite(current)):
            break
        if residual <= controls.tol:
            return Trajectory(
                xs,
                current,
                basis,
                iterations=iteration,
                residual=residual,
                residuals=tuple(history),
            )
    raise PicardConvergenceError(iteration, residual, controls.tol)


def propagate_exact(
    data: CauchyData,
    f: Nonlinearity,
    basis: SpectralBasis,
    xs: np.ndarray,
    controls: Optional[PicardControls] = None,
) -> Trajectory:
    """
    Mild solution u_p(x_i) of the Cauchy problem.

    Args:
        data (CauchyData): Exact data (u0, u1).
        f (Nonlinearity): Forcing term.
        basis (SpectralBasis): Eigenbasis.
        xs (np.ndarray): Uniform grid on [0, a].
        controls (Optional[PicardControls]): Picard controls.

    Returns:
        Trajectory: Coefficients of u on the grid.

    Raises:
        OverflowGuardError: If the growth factors overflow.
        PicardConvergenceError: If the nonlinear sweep does not converge.
    """
    controls = controls or PicardControls()
    return solve_mild(data, f, basis, xs, controls, exact_propagator(basis, xs))


def derivative_trajectory(
    data: CauchyData,
    f: Nonlinearity,
    u: Trajectory,
    basis: SpectralBasis,
    xs: np.ndarray,
    controls: Optional[PicardControls] = None,
) -> Trajectory:
    """
    The x-derivative u_x,p(x_i) from the differentiated mild formula.

    The forcing is evaluated once on the converged u with the same trapezoid
    rule used by propagate_exact.

    Args:
        data (CauchyData): Exact data (u0, u1).
        f (Nonlinearity): Forcing term.
        u (Trajectory): Output of propagate_exact for the same inputs.
        basis (SpectralBasis): Eigenbasis.
        xs (np.ndarray): Uniform grid.
        controls (Optional[PicardControls]): Supplies the y-grid.

    Returns:
        Trajectory: Coefficients of u_x on the grid.
    """
    if u.values.shape != (len(xs), basis.P):
        raise ValueError("Trajectory u does not match the grid and basis")
    propagator = derivative_propagator(basis, xs)
    values = propagator.position * data.u0.coeffs + propagator.velocity * data.u1.coeffs
    if not f.is_zero:
        forcing = forcing_trajectory(f, u, controls).values
        values = values + volterra_trapezoid(propagator.kernel, forcing, u.h)
    return replace(u, xs=xs, values=values)


def weighted_combo(
    u: Trajectory, ux: Trajectory, basis: SpectralBasis
) -> WeightedCombo:
    """
    The combination e^{sqrt_l (a - x)} (u_p(x) + u_x,p(x) / sqrt_l) in log space.

    Args:
        u (Trajectory): Solution coefficients.
        ux (Trajectory): Derivative coefficients on the same grid.
        basis (SpectralBasis): Eigenbasis.

    Returns:
        WeightedCombo: Sign and log-magnitude per (x_i, p).
    """
    if u.values.shape != ux.values.shape:
        raise ValueError("u and u_x trajectories do not match")
    sqrt_l = basis.sqrt_eigenvalues
    sign, log_abs = logspace.log_abs(u.values + ux.values / sqrt_l)
    growth = np.outer(basis.domain.a - u.xs, sqrt_l)
    return WeightedCombo(sign, log_abs + growth)


def tail_integral(f_traj: Trajectory, basis: SpectralBasis) -> np.ndarray:
    """
    Trapezoid values of int_x^a e^{sqrt_l (a - xi)} / sqrt_l f_p(xi) dxi.

    With this tail, w_p(x) = w_p(a) - tail_p(x) for every forcing.

    Args:
        f_traj (Trajectory): Forcing coefficients f_p(x_i).
        basis (SpectralBasis): Eigenbasis.

    Returns:
        np.ndarray: (Nx+1, P) tail integrals; the last row is zero.
    """
    _check_overflow_guard(basis)
    sqrt_l = basis.sqrt_eigenvalues
    growth = np.exp(np.outer(basis.domain.a - f_traj.xs, sqrt_l))
    integrand = growth / sqrt_l * f_traj.values
    # reversed samples run from a down to 0 with step h
    return cumulative_trapezoid(integrand[::-1], dx=f_traj.h, axis=0, initial=0)[::-1]


def _random_data(
    basis: SpectralBasis, modes: int, seed: int, amplitude: float
) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(seed))
    coeffs = np.zeros((2, basis.P))
    active = min(modes, basis.P)
    coeffs[:, :active] = amplitude * rng.uniform(-1.0, 1.0, size=(2, active))
    return coeffs


def _closed_form_case(
    case_id: str, kind: str, data: CauchyData, xs: np.ndarray
) -> ManufacturedCase:
    basis = data.basis
    if kind == "decaying":
        sqrt_l = basis.sqrt_eigenvalues
        decay = np.exp(-np.outer(xs, sqrt_l))
        u = Trajectory(xs, decay * data.u0.coeffs, basis)
        ux = Trajectory(xs, -sqrt_l * decay * data.u0.coeffs, basis)
    else:
        f = Nonlinearity.zero()
        u = propagate_exact(data, f, basis, xs)
        ux = derivative_trajectory(data, f, u, basis, xs)
    return ManufacturedCase(case_id, kind, data, Nonlinearity.zero(), u, ux)


def _refined_case(
    case_id: str,
    kind: str,
    data: CauchyData,
    make_f,
    xs: np.ndarray,
    controls: PicardControls,
    refinement: int,
) -> ManufacturedCase:
    basis = data.basis
    nx = len(xs) - 1
    fine_xs = uniform_grid(basis.domain.a, refinement * nx)
    fine_f = make_f(fine_xs)
    u_fine = propagate_exact(data, fine_f, basis, fine_xs, controls)
    ux_fine = derivative_trajectory(data, fine_f, u_fine, basis, fine_xs, controls)
    logger.debug(
        f"Reference for '{case_id}' at Nx = {refinement * nx}: "
        f"{u_fine.iterations} sweeps, residual {u_fine.residual:.2e}"
    )
    return ManufacturedCase(
        case_id,
        kind,
        data,
        make_f(xs),
        u_fine.subsampled(refinement),
        ux_fine.subsampled(refinement),
    )


def manufacture(
    kind: str,
    basis: SpectralBasis,
    nx: int,
    modes: int = 3,
    seed: int = 0,
    amplitude: float = 1.0,
    nonlinearity: str = "sine",
    case_id: Optional[str] = None,
    controls: Optional[PicardControls] = None,
    refinement: int = REFERENCE_REFINEMENT,
) -> ManufacturedCase:
    """
    Builds a test case with Cauchy data and reference trajectories.

    Kinds:
        zero: homogeneous data, f = 0.
        finite_mode: random data on the first `modes` modes, f = 0, closed form.
        decaying: u1 = -sqrt_l u0, so u_p = u0_p e^{-sqrt_l x}, closed form.
        nonlinear: random data with f = `nonlinearity`; reference from Picard
            at `refinement` times the resolution, subsampled.
        forced: random data, f = 0 plus a source F_p(x) = amplitude sin(pi x / a)
            on the first mode; refined reference.

    Args:
        kind (str): One of the kinds above.
        basis (SpectralBasis): Eigenbasis.
        nx (int): Number of x-intervals of the case grid.
        modes (int): Number of leading modes carrying data.
        seed (int): Seed of the Philox generator drawing the data.
        amplitude (float): Data coefficients are uniform in [-amplitude, amplitude].
        nonlinearity (str): Kind name for the nonlinear case.
        case_id (Optional[str]): Report name; defaults to the kind.
        controls (Optional[PicardControls]): Picard controls for references.
        refinement (int): Resolution factor of refined references.

    Returns:
        ManufacturedCase: Data, forcing and references on the case grid.
    """
    case_id = case_id or kind
    controls = controls or PicardControls()
    xs = uniform_grid(basis.domain.a, nx)
    coeffs = _random_data(basis, modes, seed, amplitude)

    if kind == "zero":
        return _closed_form_case(case_id, kind, CauchyData.zero_like(basis), xs)
    if kind == "finite_mode":
        data = CauchyData(
            CoefficientVector(coeffs[0], basis), CoefficientVector(coeffs[1], basis)
        )
        return _closed_form_case(case_id, kind, data, xs)
    if kind == "decaying":
        u0 = CoefficientVector(coeffs[0], basis)
        u1 = CoefficientVector(-basis.sqrt_eigenvalues * coeffs[0], basis)
        return _closed_form_case(case_id, kind, CauchyData(u0, u1), xs)

    data = CauchyData(
        CoefficientVector(coeffs[0], basis), CoefficientVector(coeffs[1], basis)
    )
    if kind == "nonlinear":
        f = Nonlinearity.from_name(nonlinearity)
        if f.kind is NonlinearityKind.ZERO:
            raise ValueError("Nonlinear case needs a nonzero nonlinearity")
        return _refined_case(
            case_id, kind, data, lambda grid: f, xs, controls, refinement
        )
    if kind == "forced":
        a = basis.domain.a

        def make_f(grid: np.ndarray) -> Nonlinearity:
            values = np.zeros((grid.size, basis.P))
            values[:, 0] = amplitude * np.sin(np.pi * grid / a)
            return Nonlinearity.zero(source=Trajectory(grid, values, basis))

        return _refined_case(case_id, kind, data, make_f, xs, controls, refinement)

    raise ValueError(
        f"Unknown case kind '{kind}'. "
        "Expected one of ['zero', 'finite_mode', 'decaying', 'nonlinear', 'forced']"
    )
