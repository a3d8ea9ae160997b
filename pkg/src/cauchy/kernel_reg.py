"""
Kernel regularization of the Cauchy problem.

The growth factors cosh(sqrt_l x) and sinh(sqrt_l x) of the mild solution are
replaced by the bounded surrogates

    cosh_eps = Psi + e^{-sqrt_l x} / 2,    sinh_eps = Psi - e^{-sqrt_l x} / 2,

built on the kernel

    Psi_{p,k}^beta(x) = e^{-sqrt_l (a - x)} / (2 beta lam^{k/2} + 2 e^{-sqrt_l a}).

For beta > 0 the kernel never exceeds (1/2) beta^{-x/a} lam^{-kx/(2a)}, and
at beta = 0 it reduces to e^{sqrt_l x} / 2, so the surrogates fall back to
cosh and sinh. Every kernel value is formed from its logarithm.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from src.cauchy import logspace
from src.cauchy.cauchy_forward import (
    CauchyData,
    PicardControls,
    Propagator,
    Trajectory,
    solve_mild,
)
from src.cauchy.errors import OverflowGuardError
from src.cauchy.nonlinearity import Nonlinearity
from src.cauchy.spectral import CoefficientVector, SpectralBasis
from src.config.config import DEFAULT_BETA_RULE, NOISE_BUDGET_FRACTION, OVERFLOW_GUARD

logger = logging.getLogger(__name__)

LOG2 = math.log(2.0)


class BetaRuleKind(str, Enum):
    """How beta is derived from the noise level."""

    EXPLICIT = "explicit"
    PROPORTIONAL = "prop"
    POWER = "pow"


@dataclass(frozen=True)
class BetaRule:
    """
    A rule epsilon -> beta.

    Attributes:
        kind (BetaRuleKind): explicit value, beta = epsilon or beta = epsilon^theta.
        value (float): The explicit beta or the exponent theta; unused for
            the proportional rule.
    """

    kind: BetaRuleKind = BetaRuleKind.PROPORTIONAL
    value: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", BetaRuleKind(self.kind))
        if self.kind is BetaRuleKind.POWER and not 0 < self.value <= 1:
            raise ValueError(
                f"Power rule exponent must lie in (0, 1], got {self.value}"
            )
        if self.kind is BetaRuleKind.EXPLICIT and not 0 < self.value < 1:
            raise ValueError(f"Explicit beta must lie in (0, 1), got {self.value}")

    @classmethod
    def parse(cls, text: str) -> "BetaRule":
        """
        Parses 'prop', 'pow:<theta>' or 'explicit:<beta>'.

        Args:
            text (str): Rule specification.

        Returns:
            BetaRule: The parsed rule.

        Raises:
            ValueError: If the text is not a known rule.
        """
        name, _, arg = text.strip().partition(":")
        try:
            kind = BetaRuleKind(name)
        except ValueError as e:
            raise ValueError(
                f"Unknown beta rule '{text}'. "
                "Expected 'prop', 'pow:<theta>' or 'explicit:<beta>'"
            ) from e
        if kind is BetaRuleKind.PROPORTIONAL:
            if arg:
                raise ValueError(f"Rule 'prop' takes no argument, got '{text}'")
            return cls(kind)
        try:
            return cls(kind, float(arg))
        except ValueError as e:
            raise ValueError(f"Invalid beta rule '{text}': {e}") from e

    def __str__(self) -> str:
        if self.kind is BetaRuleKind.PROPORTIONAL:
            return self.kind.value
        return f"{self.kind.value}:{self.value:g}"


def beta_from_rule(rule: BetaRule, epsilon: float) -> float:
    """
    Applies a beta rule to a noise level.

    Args:
        rule (BetaRule): The rule.
        epsilon (float): Noise level.

    Returns:
        float: beta in (0, 1).

    Raises:
        ValueError: If the resulting beta leaves (0, 1).
    """
    if rule.kind is BetaRuleKind.EXPLICIT:
        beta = rule.value
    elif rule.kind is BetaRuleKind.PROPORTIONAL:
        beta = epsilon
    else:
        beta = epsilon**rule.value
    if not 0 < beta < 1:
        raise ValueError(
            f"Rule '{rule}' gives beta = {beta} for epsilon = {epsilon}; "
            "beta must lie in (0, 1)"
        )
    return float(beta)


@dataclass(frozen=True)
class RegConfig:
    """
    Parameters of the regularized solver.

    Attributes:
        k (int): Kernel order, k >= 1.
        beta (Optional[float]): Fixed beta in [0, 1); 0 only reproduces the
            exact solver. None derives beta from beta_rule.
        P (Optional[int]): Number of leading modes kept; None keeps all.
        picard (PicardControls): Picard controls.
        beta_rule (BetaRule): Rule used when beta is None.
    """

    k: int = 1
    beta: Optional[float] = None
    P: Optional[int] = None  # pylint: disable=invalid-name
    picard: PicardControls = field(default_factory=PicardControls)
    beta_rule: BetaRule = field(
        default_factory=lambda: BetaRule.parse(DEFAULT_BETA_RULE)
    )

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"Kernel order k must be a positive integer, got {self.k}")
        if self.beta is not None and not 0 <= self.beta < 1:
            raise ValueError(f"beta must lie in [0, 1), got {self.beta}")
        if self.P is not None and self.P < 1:
            raise ValueError(f"Truncation P must be >= 1, got {self.P}")

    def resolve_beta(self, epsilon: float) -> float:
        """The fixed beta, or the rule applied to epsilon."""
        if self.beta is not None:
            return float(self.beta)
        return beta_from_rule(self.beta_rule, epsilon)


@dataclass(frozen=True, eq=False)
class NoisyCauchyData:
    """
    Measured Cauchy data with noise level epsilon.

    Attributes:
        u0_eps (CoefficientVector): Noisy u(0, .).
        u1_eps (CoefficientVector): Noisy u_x(0, .).
        epsilon (float): Noise level, >= 0.
        seed (Optional[int]): Seed the noise was drawn with.
    """

    u0_eps: CoefficientVector
    u1_eps: CoefficientVector
    epsilon: float
    seed: Optional[int] = None

    def __post_init__(self):
        if self.u0_eps.basis is not self.u1_eps.basis:
            raise ValueError("u0_eps and u1_eps must share a basis")
        if not self.epsilon >= 0:
            raise ValueError(f"Noise level must be >= 0, got {self.epsilon}")

    @property
    def data(self) -> CauchyData:
        """The noisy pair as plain Cauchy data."""
        return CauchyData(self.u0_eps, self.u1_eps)

    def noise_norm(self, clean: CauchyData) -> float:
        """||u0_eps - u0|| + ||u1_eps - u1|| against the clean data."""
        return float(
            np.linalg.norm(self.u0_eps.coeffs - clean.u0.coeffs)
            + np.linalg.norm(self.u1_eps.coeffs - clean.u1.coeffs)
        )


def perturb(
    data: CauchyData,
    epsilon: float,
    seed: int,
    budget_fraction: float = NOISE_BUDGET_FRACTION,
) -> NoisyCauchyData:
    """
    Adds seeded noise with ||u0_eps - u0|| + ||u1_eps - u1|| = 0.99 epsilon.

    The direction is drawn from a Philox generator and the budget is split
    evenly between the two components.

    Args:
        data (CauchyData): Clean data.
        epsilon (float): Noise level, >= 0.
        seed (int): Generator seed.
        budget_fraction (float): Share of epsilon spent.

    Returns:
        NoisyCauchyData: The perturbed data.
    """
    if not epsilon >= 0:
        raise ValueError(f"Noise level must be >= 0, got {epsilon}")
    basis = data.basis
    if epsilon == 0:
        return NoisyCauchyData(data.u0, data.u1, 0.0, seed)
    rng = np.random.Generator(np.random.Philox(seed))
    half = 0.5 * budget_fraction * epsilon
    noisy = []
    for clean in (data.u0, data.u1):
        direction = rng.standard_normal(basis.P)
        direction /= np.linalg.norm(direction)
        noisy.append(CoefficientVector(clean.coeffs + half * direction, basis))
    return NoisyCauchyData(noisy[0], noisy[1], float(epsilon), seed)


def _check_kernel_args(lam, k, beta, x, a):
    lam = np.asarray(lam, dtype=float)
    x = np.asarray(x, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    if np.any(lam <= 0):
        raise ValueError("Eigenvalues must be positive")
    if np.any(x < 0) or np.any(x > a):
        raise ValueError(f"x must lie in [0, {a}]")
    if np.any(beta < 0) or np.any(beta >= 1):
        raise ValueError("beta must lie in [0, 1)")
    if np.any(np.asarray(k) < 1):
        raise ValueError("Kernel order k must be >= 1")
    return lam, x, beta


def log_kernel_psi(lam, k, beta, x, a: float) -> np.ndarray:
    """
    log Psi_{p,k}^beta(x), broadcasting over lam, k, beta and x.

    Args:
        lam: Eigenvalues, > 0.
        k: Kernel orders, >= 1.
        beta: Regularization parameters in [0, 1).
        x: Abscissae in [0, a].
        a (float): Extent of Omega_x.

    Returns:
        np.ndarray: Log of the kernel.
    """
    lam, x, beta = _check_kernel_args(lam, k, beta, x, a)
    sqrt_l = np.sqrt(lam)
    with np.errstate(divide="ignore"):
        log_beta_term = np.log(beta) + 0.5 * np.asarray(k, dtype=float) * np.log(lam)
    return -sqrt_l * (a - x) - LOG2 - np.logaddexp(log_beta_term, -sqrt_l * a)


def kernel_psi(lam, k, beta, x, a: float) -> np.ndarray:
    """Psi_{p,k}^beta(x) as plain floats."""
    return logspace.to_linear(log_kernel_psi(lam, k, beta, x, a))


def log_kernel_bound(lam, k, beta, x, a: float) -> np.ndarray:
    """log of (1/2) beta^{-x/a} lam^{-kx/(2a)}; +inf at beta = 0 and x > 0."""
    lam, x, beta = _check_kernel_args(lam, k, beta, x, a)
    theta = x / a
    with np.errstate(divide="ignore", invalid="ignore"):
        log_beta = np.where(theta > 0, theta * np.log(beta), 0.0)
    return -LOG2 - log_beta - 0.5 * np.asarray(k, dtype=float) * theta * np.log(lam)


def kernel_bound(lam, k, beta, x, a: float) -> np.ndarray:
    """(1/2) beta^{-x/a} lam^{-kx/(2a)}."""
    return logspace.to_linear(log_kernel_bound(lam, k, beta, x, a))


def log_cosh_eps(lam, k, beta, x, a: float) -> np.ndarray:
    """log cosh_eps = log(Psi + e^{-sqrt_l x} / 2)."""
    log_psi = log_kernel_psi(lam, k, beta, x, a)
    decay = -np.sqrt(np.asarray(lam, dtype=float)) * np.asarray(x, dtype=float) - LOG2
    return np.logaddexp(log_psi, decay)


def cosh_eps(lam, k, beta, x, a: float) -> np.ndarray:
    """Psi + e^{-sqrt_l x} / 2."""
    return logspace.to_linear(log_cosh_eps(lam, k, beta, x, a))


def sinh_eps(lam, k, beta, x, a: float) -> np.ndarray:
    """
    Psi - e^{-sqrt_l x} / 2; negative near x = 0 when beta > 0.

    Written as (e^{-sqrt_l x} / 2) (e^z - 1) with
    z = 2 sqrt_l x - log(1 + beta lam^{k/2} e^{sqrt_l a}), so that small
    sqrt_l x keeps full relative precision and beta = 0 gives z = 2 sqrt_l x
    exactly.
    """
    lam, x, beta = _check_kernel_args(lam, k, beta, x, a)
    sqrt_l = np.sqrt(lam)
    with np.errstate(divide="ignore"):
        log_beta_term = np.log(beta) + 0.5 * np.asarray(k, dtype=float) * np.log(lam)
    z = 2.0 * sqrt_l * x - np.logaddexp(log_beta_term + sqrt_l * a, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        # log|e^z - 1| for either sign of z
        log_gap = np.where(
            z >= 0,
            logspace.log_expm1(np.abs(z)),
            np.log(-np.expm1(-np.abs(z))),
        )
    return np.sign(z) * logspace.to_linear(log_gap - sqrt_l * x - LOG2)


def regularized_propagator(
    basis: SpectralBasis, xs: np.ndarray, k: int, beta: float
) -> Propagator:
    """
    Factors (cosh_eps, sinh_eps / sqrt_l, sinh_eps / sqrt_l) on the grid.

    Raises:
        OverflowGuardError: If beta = 0 and sqrt(lambda_P) * a exceeds the guard.
    """
    a = basis.domain.a
    if beta == 0:
        exponent = float(basis.sqrt_eigenvalues[-1] * a)
        if exponent > OVERFLOW_GUARD:
            raise OverflowGuardError(
                f"beta = 0 with sqrt(lambda_P) * a = {exponent:.1f} exceeds the "
                f"overflow guard {OVERFLOW_GUARD}"
            )
    lam = basis.eigenvalues[np.newaxis, :]
    grid = np.clip(np.asarray(xs, dtype=float), 0.0, a)[:, np.newaxis]
    sinh_over = sinh_eps(lam, k, beta, grid, a) / basis.sqrt_eigenvalues
    return Propagator(cosh_eps(lam, k, beta, grid, a), sinh_over, sinh_over)


def amplification(
    basis: SpectralBasis, xs: np.ndarray, k: int, beta: float
) -> np.ndarray:
    """
    Per-mode amplification max_x max(cosh_eps, |sinh_eps| / sqrt_l).

    For beta > 0 every entry is at most beta^{-1} lambda_1^{-k/2} + 1.

    Returns:
        np.ndarray: (P,) amplification factors.
    """
    prop = regularized_propagator(basis, xs, k, beta)
    return np.maximum(prop.position, np.abs(prop.velocity)).max(axis=0)


def amplification_bound(basis: SpectralBasis, k: int, beta: float) -> float:
    """beta^{-1} lambda_1^{-k/2} + 1."""
    if beta == 0:
        return math.inf
    return 1.0 / (beta * basis.eigenvalues[0] ** (0.5 * k)) + 1.0


def truncation_mask(
    basis: SpectralBasis, P: Optional[int]  # pylint: disable=invalid-name
) -> np.ndarray:
    """0/1 weights keeping the first P modes."""
    if P is None:
        return np.ones(basis.P)
    if P > basis.P:
        raise ValueError(f"Truncation P = {P} exceeds the basis size {basis.P}")
    mask = np.zeros(basis.P)
    mask[:P] = 1.0
    return mask


def regularized_solve(
    data: NoisyCauchyData,
    f: Nonlinearity,
    cfg: RegConfig,
    basis: SpectralBasis,
    xs: np.ndarray,
    clean: Optional[CauchyData] = None,
) -> Trajectory:
    """
    The regularized solution u^eps on the grid.

    Runs the Picard engine of the exact solver with the regularized
    propagator. The noisy data enter the data terms unless clean data are
    supplied.

    Args:
        data (NoisyCauchyData): Measured data and noise level.
        f (Nonlinearity): Forcing term.
        cfg (RegConfig): Kernel order, beta, truncation and Picard controls.
        basis (SpectralBasis): Eigenbasis.
        xs (np.ndarray): Uniform grid on [0, a].
        clean (Optional[CauchyData]): Data to use in place of the noisy pair.

    Returns:
        Trajectory: Coefficients of u^eps.

    Raises:
        ValueError: If beta is invalid or P exceeds the basis size.
        PicardConvergenceError: If the nonlinear sweep does not converge.
    """
    beta = cfg.resolve_beta(data.epsilon)
    mask = truncation_mask(basis, cfg.P)
    logger.debug(
        f"Regularized solve: k = {cfg.k}, beta = {beta:.3e}, P = {int(mask.sum())}"
    )
    propagator = regularized_propagator(basis, xs, cfg.k, beta)
    terms = clean if clean is not None else data.data
    return solve_mild(terms, f, basis, xs, cfg.picard, propagator, mode_mask=mask)
