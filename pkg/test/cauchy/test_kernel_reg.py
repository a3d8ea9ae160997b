"""
Unit tests for the regularizing kernel and the regularized solver.
"""

import math

import numpy as np
import pytest

from src.cauchy.cauchy_forward import (
    CauchyData,
    manufacture,
    propagate_exact,
    uniform_grid,
)
from src.cauchy.kernel_reg import (
    BetaRule,
    BetaRuleKind,
    RegConfig,
    amplification,
    amplification_bound,
    beta_from_rule,
    cosh_eps,
    kernel_psi,
    log_kernel_bound,
    log_kernel_psi,
    perturb,
    regularized_solve,
    sinh_eps,
    truncation_mask,
)
from src.cauchy.nonlinearity import Nonlinearity
from src.cauchy.spectral import BoxDomain, CoefficientVector, build_basis

A = 0.5
LAMBDA_1 = 2 * math.pi**2


@pytest.fixture
def square_basis():
    """Nine modes on the unit square, a = 0.5."""
    return build_basis(BoxDomain((1.0, 1.0), A), (3, 3))


@pytest.fixture
def finite_mode(square_basis):
    """Three-mode case without forcing."""
    return manufacture("finite_mode", square_basis, 64, seed=7)


class TestKernel:
    """Psi, its bound and the surrogates."""

    def test_beta_zero_is_half_exponential(self):
        """beta = 0 reduces Psi to e^{sqrt_l x} / 2."""
        xs = np.linspace(0.0, A, 11)
        lam = 40.0

        log_psi = log_kernel_psi(lam, 1, 0.0, xs, A)

        expected = math.sqrt(lam) * xs - math.log(2.0)
        np.testing.assert_allclose(log_psi, expected, atol=1e-12)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_value_at_a(self, k):
        """x = a gives 1 / (2 beta lam^{k/2} + 2 e^{-sqrt_l a})."""
        lam, beta = 50.0, 1e-3
        expected = 1.0 / (2 * beta * lam ** (k / 2) + 2 * math.exp(-math.sqrt(lam) * A))

        assert kernel_psi(lam, k, beta, A, A) == pytest.approx(expected, rel=1e-12)

    def test_finite_far_beyond_double_range(self):
        """sqrt_l a = 5000 still gives a finite log value."""
        lam = (1e4) ** 2

        value = log_kernel_psi(lam, 1, 0.0, A, A)

        assert value == pytest.approx(1e4 * A - math.log(2.0))

    def test_bound_on_parameter_grid(self):
        """Psi <= (1/2) beta^{-x/a} lam^{-kx/(2a)} on 15750 tuples."""
        lam = np.logspace(math.log10(LAMBDA_1), 6, 25)
        xs = np.linspace(0.0, A, 21)
        beta = np.logspace(-8, math.log10(0.9), 10)
        k = np.array([1, 2, 3])
        grid = np.meshgrid(lam, k, beta, xs, indexing="ij")

        log_psi = log_kernel_psi(grid[0], grid[1], grid[2], grid[3], A)
        log_bound = log_kernel_bound(grid[0], grid[1], grid[2], grid[3], A)

        assert log_psi.size >= 10_000
        assert np.all(np.isfinite(log_psi))
        assert np.count_nonzero(log_psi > log_bound + 1e-12) == 0

    def test_monotone_in_beta_and_x(self):
        """Psi decreases strictly in beta and increases strictly in x."""
        betas = np.logspace(-3, math.log10(0.9), 12)
        xs = np.linspace(0.0, A, 12)

        in_beta = log_kernel_psi(20.0, 2, betas, 0.3, A)
        in_x = log_kernel_psi(20.0, 2, 1e-2, xs, A)

        assert np.all(np.diff(in_beta) < 0)
        assert np.all(np.diff(in_x) > 0)

    @pytest.mark.parametrize(
        "x, beta", [(-0.1, 0.1), (A + 0.1, 0.1), (0.2, 1.0), (0.2, -0.5)]
    )
    def test_rejects_inadmissible_arguments(self, x, beta):
        """x outside [0, a] and beta outside [0, 1) are rejected."""
        with pytest.raises(ValueError):
            log_kernel_psi(20.0, 1, beta, x, A)

    def test_surrogates_reduce_to_hyperbolic_functions(self):
        """At beta = 0 cosh_eps and sinh_eps are cosh and sinh."""
        lam = 20.0
        xs = np.linspace(0.0, A, 11)
        sqrt_l = math.sqrt(lam)

        np.testing.assert_allclose(
            cosh_eps(lam, 1, 0.0, xs, A), np.cosh(sqrt_l * xs), rtol=1e-12
        )
        np.testing.assert_allclose(
            sinh_eps(lam, 1, 0.0, xs, A), np.sinh(sqrt_l * xs), rtol=1e-12
        )

    @pytest.mark.parametrize("x", [1e-8, 1e-6, 1e-3, 0.5])
    def test_sinh_eps_keeps_relative_precision_near_origin(self, x):
        """sinh_eps(1, k, 0, x, 1) agrees with sinh(x) to rounding for tiny x."""
        assert sinh_eps(1.0, 1, 0.0, x, 1.0) == pytest.approx(math.sinh(x), rel=1e-12)

    @pytest.mark.parametrize("beta", [1e-6, 1e-3, 0.5])
    def test_sinh_eps_is_kernel_minus_decay(self, beta):
        """With beta > 0, sinh_eps equals Psi - e^{-sqrt_l x} / 2."""
        lam, k = 50.0, 2
        xs = np.linspace(0.0, A, 11)
        expected = kernel_psi(lam, k, beta, xs, A) - 0.5 * np.exp(-math.sqrt(lam) * xs)

        np.testing.assert_allclose(
            sinh_eps(lam, k, beta, xs, A), expected, rtol=1e-10, atol=1e-13
        )

    def test_sinh_eps_is_negative_at_origin_with_regularization(self):
        """sinh_eps(0) = Psi(0) - 1/2 < 0 once beta > 0."""
        assert sinh_eps(50.0, 1, 1e-3, 0.0, A) < 0
        assert sinh_eps(50.0, 1, 0.0, 0.0, A) == 0.0

    @pytest.mark.parametrize("beta", [0.0, 1e-6, 0.5])
    def test_difference_is_one_at_origin(self, beta):
        """cosh_eps - sinh_eps = 1 at x = 0."""
        difference = cosh_eps(30.0, 2, beta, 0.0, A) - sinh_eps(30.0, 2, beta, 0.0, A)

        assert difference == pytest.approx(1.0, abs=1e-12)

    def test_cosh_eps_bounded(self):
        """0 < cosh_eps <= (1/2) beta^{-x/a} lam^{-kx/(2a)} + 1/2."""
        xs = np.linspace(0.0, A, 21)
        lam, k, beta = 300.0, 1, 1e-4

        values = cosh_eps(lam, k, beta, xs, A)
        bound = 0.5 * beta ** (-xs / A) * lam ** (-k * xs / (2 * A)) + 0.5

        assert np.all(values > 0)
        assert np.all(values <= bound * (1 + 1e-12))


class TestAmplification:
    """Per-mode amplification of the regularized propagator."""

    @pytest.mark.parametrize("k", [1, 2, 3])
    @pytest.mark.parametrize("beta", [1e-1, 1e-3, 1e-6])
    def test_below_bound(self, square_basis, k, beta):
        """max_x max(cosh_eps, |sinh_eps| / sqrt_l) <= 1 / (beta lam_1^{k/2}) + 1."""
        xs = uniform_grid(A, 64)

        factors = amplification(square_basis, xs, k, beta)

        assert factors.shape == (square_basis.P,)
        assert np.all(factors <= amplification_bound(square_basis, k, beta))

    def test_bound_is_infinite_without_regularization(self, square_basis):
        """beta = 0 has no finite bound."""
        assert amplification_bound(square_basis, 1, 0.0) == math.inf


class TestPerturb:
    """Seeded noise with an exact budget."""

    @pytest.mark.parametrize("epsilon", [1e-1, 1e-4, 1e-8])
    def test_budget(self, finite_mode, epsilon):
        """||u0_eps - u0|| + ||u1_eps - u1|| = 0.99 epsilon."""
        noisy = perturb(finite_mode.data, epsilon, seed=5)

        spent = noisy.noise_norm(finite_mode.data)
        assert spent == pytest.approx(0.99 * epsilon, abs=1e-12)
        assert noisy.epsilon == epsilon

    def test_deterministic(self, finite_mode):
        """The same seed gives bit-identical data."""
        first = perturb(finite_mode.data, 1e-3, seed=42)
        second = perturb(finite_mode.data, 1e-3, seed=42)
        other = perturb(finite_mode.data, 1e-3, seed=43)

        np.testing.assert_array_equal(first.u0_eps.coeffs, second.u0_eps.coeffs)
        np.testing.assert_array_equal(first.u1_eps.coeffs, second.u1_eps.coeffs)
        assert not np.array_equal(first.u0_eps.coeffs, other.u0_eps.coeffs)

    def test_zero_noise_returns_data(self, finite_mode):
        """epsilon = 0 leaves the data unchanged."""
        noisy = perturb(finite_mode.data, 0.0, seed=1)

        assert noisy.u0_eps is finite_mode.data.u0
        assert noisy.u1_eps is finite_mode.data.u1

    def test_rejects_negative_noise(self, finite_mode):
        """Noise levels are nonnegative."""
        with pytest.raises(ValueError):
            perturb(finite_mode.data, -1e-3, seed=1)


class TestBetaRules:
    """Parsing and applying beta rules."""

    @pytest.mark.parametrize(
        "text, epsilon, expected",
        [("prop", 1e-3, 1e-3), ("pow:0.5", 1e-4, 1e-2), ("explicit:0.5", 1e-6, 0.5)],
    )
    def test_rules(self, text, epsilon, expected):
        """prop gives epsilon, pow gives epsilon^theta, explicit its value."""
        beta = beta_from_rule(BetaRule.parse(text), epsilon)

        assert beta == pytest.approx(expected, rel=1e-12)

    def test_rule_leaving_unit_interval(self):
        """The proportional rule refuses epsilon >= 1."""
        with pytest.raises(ValueError, match="beta must lie"):
            beta_from_rule(BetaRule.parse("prop"), 1.0)

    @pytest.mark.parametrize(
        "text", ["bogus", "prop:2", "pow:1.5", "explicit:1", "pow:x"]
    )
    def test_parse_rejects(self, text):
        """Unknown names and out-of-range arguments are rejected."""
        with pytest.raises(ValueError):
            BetaRule.parse(text)

    @pytest.mark.parametrize("text", ["prop", "pow:0.5", "explicit:0.25"])
    def test_str_round_trip(self, text):
        """Rules print back to their specification."""
        assert str(BetaRule.parse(text)) == text

    def test_reg_config(self):
        """Fixed beta takes precedence over the rule."""
        rule = BetaRule(BetaRuleKind.POWER, 0.5)

        assert RegConfig(k=2, beta_rule=rule).resolve_beta(1e-4) == pytest.approx(1e-2)
        assert RegConfig(k=2, beta=0.3, beta_rule=rule).resolve_beta(1e-4) == 0.3
        with pytest.raises(ValueError):
            RegConfig(k=0)
        with pytest.raises(ValueError):
            RegConfig(beta=1.0)


class TestRegularizedSolve:
    """The regularized solution u^eps."""

    def test_degenerates_to_exact_solver(self, finite_mode, square_basis):
        """beta = 0 and epsilon = 0 reproduce the exact solution."""
        noisy = perturb(finite_mode.data, 0.0, seed=1)

        u_eps = regularized_solve(
            noisy,
            Nonlinearity.zero(),
            RegConfig(beta=0.0),
            square_basis,
            finite_mode.xs,
        )

        scale = np.max(np.abs(finite_mode.u_ref.values))
        assert np.max(np.abs(u_eps.values - finite_mode.u_ref.values)) / scale <= 1e-10

    def test_degenerates_with_sine_forcing(self, square_basis):
        """The degeneration also holds through the Picard sweep."""
        case = manufacture("nonlinear", square_basis, 32, seed=13, amplitude=0.2)
        noisy = perturb(case.data, 0.0, seed=1)

        u_eps = regularized_solve(
            noisy, case.nonlinearity, RegConfig(beta=0.0), square_basis, case.xs
        )
        u = propagate_exact(case.data, case.nonlinearity, square_basis, case.xs)

        scale = np.max(np.abs(u.values))
        assert np.max(np.abs(u_eps.values - u.values)) / scale <= 1e-10

    def test_single_mode_closed_form(self):
        """For f = 0 each mode is cosh_eps u0_eps + sinh_eps / sqrt_l u1_eps."""
        basis = build_basis(BoxDomain((1.0,), A), (1,))
        xs = uniform_grid(A, 32)
        data = CauchyData(
            CoefficientVector(np.array([1.0]), basis),
            CoefficientVector(np.array([0.5]), basis),
        )
        noisy = perturb(data, 1e-2, seed=3)
        lam = basis.eigenvalues[0]

        u_eps = regularized_solve(
            noisy, Nonlinearity.zero(), RegConfig(k=2, beta=1e-2), basis, xs
        )

        expected = (
            cosh_eps(lam, 2, 1e-2, xs, A) * noisy.u0_eps.coeffs[0]
            + sinh_eps(lam, 2, 1e-2, xs, A) / math.sqrt(lam) * noisy.u1_eps.coeffs[0]
        )
        np.testing.assert_allclose(u_eps.values[:, 0], expected, rtol=1e-12, atol=1e-13)

    def test_clean_data_override(self, finite_mode, square_basis):
        """Passing clean data ignores the noise in the data terms."""
        noisy = perturb(finite_mode.data, 1e-2, seed=9)
        cfg = RegConfig(beta=1e-2)
        f = Nonlinearity.zero()

        with_clean = regularized_solve(
            noisy, f, cfg, square_basis, finite_mode.xs, clean=finite_mode.data
        )
        noiseless = regularized_solve(
            perturb(finite_mode.data, 0.0, seed=9), f, cfg, square_basis, finite_mode.xs
        )

        np.testing.assert_array_equal(with_clean.values, noiseless.values)

    def test_error_decreases_with_noise(self, finite_mode, square_basis):
        """With beta = epsilon the error shrinks along the noise ladder."""
        epsilons = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
        nodes = [16, 32, 48, 64]
        errors = []
        for step, epsilon in enumerate(epsilons):
            noisy = perturb(finite_mode.data, epsilon, seed=step)
            u_eps = regularized_solve(
                noisy, Nonlinearity.zero(), RegConfig(), square_basis, finite_mode.xs
            )
            diff = u_eps.values[nodes] - finite_mode.u_ref.values[nodes]
            errors.append(np.linalg.norm(diff, axis=1))
        errors = np.array(errors)

        assert np.all(errors > 0)
        assert np.all(errors[1:] <= 1.05 * errors[:-1])
        sup_errors = errors.max(axis=1)
        slope = np.polyfit(np.log10(epsilons), np.log10(sup_errors), 1)[0]
        assert slope > 0

    def test_truncation(self, finite_mode, square_basis):
        """P keeps the leading modes and zeroes the rest."""
        noisy = perturb(finite_mode.data, 1e-3, seed=2)

        u_eps = regularized_solve(
            noisy, Nonlinearity.zero(), RegConfig(P=2), square_basis, finite_mode.xs
        )

        assert np.all(u_eps.values[:, 2:] == 0.0)
        assert np.any(u_eps.values[:, :2] != 0.0)

    def test_truncation_mask(self, square_basis):
        """The mask keeps exactly P modes and refuses P beyond the basis."""
        mask = truncation_mask(square_basis, 3)
        np.testing.assert_array_equal(mask[:4], [1, 1, 1, 0])
        assert truncation_mask(square_basis, None).sum() == square_basis.P
        with pytest.raises(ValueError, match="exceeds"):
            truncation_mask(square_basis, 10)
