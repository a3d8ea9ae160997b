"""
Sine eigenbasis of -Laplace with zero Dirichlet conditions on an n-box.

This module builds the sorted eigenpairs of the operator on
(0, a_1) x ... x (0, a_n), evaluates the normalized eigenfunctions and
converts between physical samples on a tensor Gauss-Legendre grid and
spectral coefficients <v, phi_p>. Transforms are direct O(P * G) sums.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from src.config.config import QUADRATURE_EXTRA_NODES

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoxDomain:
    """
    The cylinder Omega = (0, a) x Omega_y with Omega_y a box.

    Attributes:
        dims (Tuple[float, ...]): Edge lengths a_1..a_n of Omega_y.
        a (float): Extent of Omega_x = (0, a).
    """

    dims: Tuple[float, ...]
    a: float

    def __post_init__(self):
        dims = tuple(float(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "a", float(self.a))
        if len(dims) < 1:
            raise ValueError("BoxDomain needs at least one y-dimension")
        if any(not d > 0 for d in dims):
            raise ValueError(f"Edge lengths must be positive, got {dims}")
        if not self.a > 0:
            raise ValueError(f"x-extent a must be positive, got {self.a}")

    @property
    def n(self) -> int:
        """Number of y-dimensions."""
        return len(self.dims)


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """
    Eigenpairs of -Laplace on the box, sorted by eigenvalue.

    Attributes:
        domain (BoxDomain): The domain the basis lives on.
        indices (np.ndarray): (P, n) positive sine indices, one row per mode.
        eigenvalues (np.ndarray): (P,) nondecreasing eigenvalues.
    """

    domain: BoxDomain
    indices: np.ndarray
    eigenvalues: np.ndarray

    @property
    def P(self) -> int:  # pylint: disable=invalid-name
        """Number of retained modes."""
        return int(self.eigenvalues.shape[0])

    @property
    def sqrt_eigenvalues(self) -> np.ndarray:
        """sqrt(lambda_p) for every mode."""
        return np.sqrt(self.eigenvalues)

    @property
    def max_index(self) -> Tuple[int, ...]:
        """Largest sine index used in each dimension."""
        return tuple(int(m) for m in self.indices.max(axis=0))

    def mode_label(self, p: int) -> str:
        """Index tuple of 0-based mode p rendered as '1-2'."""
        return "-".join(str(int(n)) for n in self.indices[p])


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """
    A function of y given by its first P coefficients <v, phi_p>.

    Attributes:
        coeffs (np.ndarray): (P,) finite coefficients.
        basis (SpectralBasis): Basis the coefficients refer to.
    """

    coeffs: np.ndarray
    basis: SpectralBasis

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "coeffs", coeffs)
        if coeffs.shape != (self.basis.P,):
            raise ValueError(
                f"Expected {self.basis.P} coefficients, got shape {coeffs.shape}"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("Coefficient vector contains non-finite entries")

    def norm(self) -> float:
        """L2(Omega_y) norm, equal to the l2 norm of the coefficients."""
        return float(np.linalg.norm(self.coeffs))

    @classmethod
    def zeros(cls, basis: SpectralBasis) -> "CoefficientVector":
        """The zero function."""
        return cls(np.zeros(basis.P), basis)

    @classmethod
    def unit(cls, basis: SpectralBasis, p: int) -> "CoefficientVector":
        """The eigenfunction phi_p for 1-based p."""
        coeffs = np.zeros(basis.P)
        coeffs[p - 1] = 1.0
        return cls(coeffs, basis)


@dataclass(frozen=True, eq=False)
class TensorGrid:
    """
    Tensor-product quadrature grid on Omega_y.

    Attributes:
        nodes (Tuple[np.ndarray, ...]): Strictly increasing interior nodes per
            dimension.
        weights (Tuple[np.ndarray, ...]): Matching quadrature weights.
    """

    nodes: Tuple[np.ndarray, ...]
    weights: Tuple[np.ndarray, ...] = field(default=())

    def __post_init__(self):
        nodes = tuple(np.asarray(n, dtype=float) for n in self.nodes)
        weights = tuple(np.asarray(w, dtype=float) for w in self.weights)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        for j, n in enumerate(nodes):
            if n.ndim != 1 or n.size < 1 or np.any(np.diff(n) <= 0):
                raise ValueError(
                    f"Nodes in dimension {j} must be strictly increasing"
                )
        if weights and [w.shape for w in weights] != [n.shape for n in nodes]:
            raise ValueError("Weights must match nodes in every dimension")

    def check_inside(self, domain: BoxDomain):
        """
        Verifies that every node lies strictly inside (0, a_j).

        Args:
            domain (BoxDomain): Box the grid is used on.

        Raises:
            ValueError: On a dimension mismatch or a node on or outside the
                boundary.
        """
        if len(self.nodes) != domain.n:
            raise ValueError("Grid and box have different dimensions")
        for j, (n, length) in enumerate(zip(self.nodes, domain.dims)):
            if n[0] <= 0.0 or n[-1] >= length:
                raise ValueError(
                    f"Nodes in dimension {j} must lie strictly inside (0, {length})"
                )

    @classmethod
    def gauss_legendre(
        cls, domain: BoxDomain, orders: Sequence[int]
    ) -> "TensorGrid":
        """
        Builds the tensor Gauss-Legendre grid on the box.

        Args:
            domain (BoxDomain): Supplies the edge lengths.
            orders (Sequence[int]): Number of nodes per dimension.

        Returns:
            TensorGrid: Nodes mapped to (0, a_j) with scaled weights.
        """
        if len(orders) != domain.n:
            raise ValueError(
                f"Need {domain.n} quadrature orders, got {len(orders)}"
            )
        nodes, weights = [], []
        for length, order in zip(domain.dims, orders):
            t, w = leggauss(int(order))
            nodes.append((t + 1.0) * length / 2.0)
            weights.append(w * length / 2.0)
        return cls(tuple(nodes), tuple(weights))

    @property
    def shape(self) -> Tuple[int, ...]:
        """Node counts G_j per dimension."""
        return tuple(n.size for n in self.nodes)

    @property
    def size(self) -> int:
        """Total number of grid points."""
        return int(np.prod(self.shape))

    @property
    def points(self) -> np.ndarray:
        """(G, n) flattened grid points in C order."""
        mesh = np.meshgrid(*self.nodes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def flat_weights(self) -> np.ndarray:
        """(G,) product weights in the same order as points."""
        if not self.weights:
            raise ValueError("Grid carries no quadrature weights")
        mesh = np.meshgrid(*self.weights, indexing="ij")
        return np.prod(np.stack([m.ravel() for m in mesh], axis=1), axis=1)


def quadrature_order(max_sine_index: int) -> int:
    """
    Gauss-Legendre points needed per dimension for products of sines.

    Products of two retained sines oscillate with frequency up to
    pi * M on the reference interval; ceil(pi * M) plus a fixed number of
    extra nodes integrates them to rounding.

    Args:
        max_sine_index (int): Largest sine index M in the dimension.

    Returns:
        int: Node count, never below M + 2.
    """
    if max_sine_index < 1:
        raise ValueError(f"max sine index must be >= 1, got {max_sine_index}")
    return max(
        max_sine_index + 2,
        math.ceil(math.pi * max_sine_index) + QUADRATURE_EXTRA_NODES,
    )


def analysis_grid(basis: SpectralBasis) -> TensorGrid:
    """Gauss-Legendre grid that resolves every retained eigenfunction product."""
    orders = [quadrature_order(m) for m in basis.max_index]
    return TensorGrid.gauss_legendre(basis.domain, orders)


def build_basis(domain: BoxDomain, max_index: Sequence[int]) -> SpectralBasis:
    """
    Enumerates the eigenpairs of -Laplace on the box.

    Args:
        domain (BoxDomain): The box Omega_y and the extent a.
        max_index (Sequence[int]): Largest sine index per dimension.

    Returns:
        SpectralBasis: prod(max_index) modes sorted by eigenvalue, ties broken
            lexicographically on the index tuple.

    Raises:
        ValueError: If max_index has the wrong length or a non-positive entry.
    """
    max_index = [int(m) for m in max_index]
    if len(max_index) != domain.n:
        raise ValueError(
            f"max_index has {len(max_index)} entries for a {domain.n}-D box"
        )
    if any(m < 1 for m in max_index):
        raise ValueError(f"max_index entries must be >= 1, got {max_index}")

    modes = []
    for tup in itertools.product(*(range(1, m + 1) for m in max_index)):
        lam = sum((math.pi * n / a_j) ** 2 for n, a_j in zip(tup, domain.dims))
        modes.append((lam, tup))
    modes.sort()

    indices = np.array([tup for _, tup in modes], dtype=int)
    eigenvalues = np.array([lam for lam, _ in modes], dtype=float)
    logger.debug(f"Built basis with {len(modes)} modes, max index {max_index}")
    return SpectralBasis(domain, indices, eigenvalues)


def eval_eigenfunction(basis: SpectralBasis, p: int, y: Sequence[float]) -> float:
    """
    Evaluates phi_p(y) = prod_j sqrt(2/a_j) sin(pi n_j y_j / a_j).

    Args:
        basis (SpectralBasis): The eigenbasis.
        p (int): 1-based mode number.
        y (Sequence[float]): Point strictly inside the box.

    Returns:
        float: The eigenfunction value.

    Raises:
        ValueError: If p is out of range or y is not strictly interior.
    """
    if not 1 <= p <= basis.P:
        raise ValueError(f"Mode {p} outside 1..{basis.P}")
    y = np.asarray(y, dtype=float).reshape(-1)
    dims = np.asarray(basis.domain.dims)
    if y.shape != dims.shape:
        raise ValueError(f"Point has {y.size} coordinates, box has {dims.size}")
    if np.any(y <= 0) or np.any(y >= dims):
        raise ValueError(f"Point {y.tolist()} is not strictly inside the box")
    n = basis.indices[p - 1]
    return float(np.prod(np.sqrt(2.0 / dims) * np.sin(np.pi * n * y / dims)))


def eigenfunction_table(basis: SpectralBasis, grid: TensorGrid) -> np.ndarray:
    """
    Evaluates all eigenfunctions on all grid points.

    Args:
        basis (SpectralBasis): The eigenbasis.
        grid (TensorGrid): Grid on the same box.

    Returns:
        np.ndarray: (G, P) table with entry [g, p] = phi_p(point g).

    Raises:
        ValueError: If the grid does not fit strictly inside the box.
    """
    grid.check_inside(basis.domain)
    mesh_idx = np.meshgrid(*(np.arange(s) for s in grid.shape), indexing="ij")
    table = np.ones((grid.size, basis.P))
    for j, (nodes, length) in enumerate(zip(grid.nodes, basis.domain.dims)):
        n_j = np.arange(1, basis.max_index[j] + 1)
        sines = np.sqrt(2.0 / length) * np.sin(
            np.pi * np.outer(nodes, n_j) / length
        )
        table *= sines[mesh_idx[j].ravel()][:, basis.indices[:, j] - 1]
    return table


def analyze(
    basis: SpectralBasis, samples: np.ndarray, grid: TensorGrid
) -> CoefficientVector:
    """
    Projects samples onto the eigenbasis by tensor-product quadrature.

    Args:
        basis (SpectralBasis): Target basis.
        samples (np.ndarray): Values of v on the grid, shape grid.shape.
        grid (TensorGrid): Quadrature grid with weights.

    Returns:
        CoefficientVector: Approximations of <v, phi_p>.

    Raises:
        ValueError: On a shape mismatch or an under-resolved grid.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape != grid.shape:
        raise ValueError(
            f"Samples of shape {samples.shape} do not match grid {grid.shape}"
        )
    for j, (count, m) in enumerate(zip(grid.shape, basis.max_index)):
        if count < 2 * m:
            raise ValueError(
                f"Grid has {count} nodes in dimension {j}, "
                f"needs at least {2 * m} for sine index {m}"
            )
    table = eigenfunction_table(basis, grid)
    coeffs = (samples.ravel() * grid.flat_weights) @ table
    return CoefficientVector(coeffs, basis)


def synthesize(coeffs: CoefficientVector, grid: TensorGrid) -> np.ndarray:
    """
    Evaluates sum_p c_p phi_p(y) on every grid point.

    Args:
        coeffs (CoefficientVector): Spectral coefficients.
        grid (TensorGrid): Evaluation grid.

    Returns:
        np.ndarray: Samples with shape grid.shape.
    """
    table = eigenfunction_table(coeffs.basis, grid)
    return (table @ coeffs.coeffs).reshape(grid.shape)
