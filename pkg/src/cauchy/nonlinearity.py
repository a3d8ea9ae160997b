"""
Semilinear forcing terms f(x, y, u) = f(u) + F(x, y).

Each kind satisfies f(0) = 0 and carries the constant of its modulus of
continuity |f(u) - f(v)| <= omega(|u - v|). The power law is only admitted
under an asserted bound |u| <= B, where it is Lipschitz with constant
L * alpha * B^(alpha - 1).
"""

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Optional

import numpy as np

from src.config.config import (
    LINEAR_COEFFICIENT,
    POWER_ALPHA,
    POWER_BOUND,
    POWER_LIPSCHITZ,
    RATIONAL_LIPSCHITZ,
    SINE_LIPSCHITZ,
)

if TYPE_CHECKING:
    from src.cauchy.cauchy_forward import Trajectory


class NonlinearityKind(str, Enum):
    """Shipped pointwise nonlinearities."""

    ZERO = "zero"
    LINEAR = "linear"
    SINE = "sine"
    RATIONAL = "rational"
    POWER = "power"


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """
    Pointwise nonlinearity plus an optional source term.

    Attributes:
        kind (NonlinearityKind): Which f(u) to apply.
        lipschitz (float): The constant L of the modulus.
        alpha (float): Exponent of the power kind.
        coefficient (float): Slope c of the linear kind.
        bound (Optional[float]): Asserted bound B on |u| for the power kind.
        source (Optional[Trajectory]): Coefficients F_p(x_i) of F(x, y).
    """

    kind: NonlinearityKind = NonlinearityKind.ZERO
    lipschitz: float = 0.0
    alpha: float = 1.0
    coefficient: float = 0.0
    bound: Optional[float] = None
    source: Optional["Trajectory"] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", NonlinearityKind(self.kind))
        if self.lipschitz < 0:
            raise ValueError(f"Lipschitz constant must be >= 0, got {self.lipschitz}")
        if self.kind is NonlinearityKind.POWER:
            if self.alpha < 1:
                raise ValueError(f"Power exponent must be >= 1, got {self.alpha}")
            if self.bound is None or not self.bound > 0:
                raise ValueError("Power nonlinearity needs a positive bound B on |u|")

    @classmethod
    def zero(cls, source: Optional["Trajectory"] = None) -> "Nonlinearity":
        """f(u) = 0, optionally with a source F."""
        return cls(NonlinearityKind.ZERO, source=source)

    @classmethod
    def linear(cls, c: float) -> "Nonlinearity":
        """f(u) = c u."""
        return cls(NonlinearityKind.LINEAR, lipschitz=abs(c), coefficient=c)

    @classmethod
    def sine(cls) -> "Nonlinearity":
        """f(u) = sin(u)."""
        return cls(NonlinearityKind.SINE, lipschitz=SINE_LIPSCHITZ)

    @classmethod
    def rational(cls) -> "Nonlinearity":
        """f(u) = u / (1 + u^2)."""
        return cls(NonlinearityKind.RATIONAL, lipschitz=RATIONAL_LIPSCHITZ)

    @classmethod
    def power(cls, lipschitz: float, alpha: float, bound: float) -> "Nonlinearity":
        """f(u) = L sign(u) min(|u|, B)^alpha."""
        return cls(
            NonlinearityKind.POWER, lipschitz=lipschitz, alpha=alpha, bound=bound
        )

    @classmethod
    def from_name(cls, name: str) -> "Nonlinearity":
        """Builds a kind from its name, taking parameters from the config."""
        factories = {
            "zero": cls.zero,
            "linear": lambda: cls.linear(LINEAR_COEFFICIENT),
            "sine": cls.sine,
            "rational": cls.rational,
            "power": lambda: cls.power(POWER_LIPSCHITZ, POWER_ALPHA, POWER_BOUND),
        }
        if name not in factories:
            raise ValueError(
                f"Unknown nonlinearity '{name}'. Expected one of {sorted(factories)}"
            )
        return factories[name]()

    def with_source(self, source: Optional["Trajectory"]) -> "Nonlinearity":
        """Copy of this nonlinearity with another source term."""
        return Nonlinearity(
            self.kind, self.lipschitz, self.alpha, self.coefficient, self.bound, source
        )

    @property
    def is_pointwise_zero(self) -> bool:
        """True when f(u) vanishes identically."""
        return self.kind is NonlinearityKind.ZERO

    @property
    def is_zero(self) -> bool:
        """True when the whole forcing f(u) + F vanishes."""
        return self.is_pointwise_zero and self.source is None

    @property
    def effective_lipschitz(self) -> float:
        """Lipschitz constant used for monitoring (L alpha B^(alpha-1) for power)."""
        if self.kind is NonlinearityKind.POWER:
            return self.lipschitz * self.alpha * self.bound ** (self.alpha - 1)
        return self.lipschitz

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if self.kind is NonlinearityKind.ZERO:
            return np.zeros_like(u)
        if self.kind is NonlinearityKind.LINEAR:
            return self.coefficient * u
        if self.kind is NonlinearityKind.SINE:
            return np.sin(u)
        if self.kind is NonlinearityKind.RATIONAL:
            return u / (1.0 + u * u)
        clipped = np.minimum(np.abs(u), self.bound)
        return self.lipschitz * np.sign(u) * clipped**self.alpha

    def modulus(self, t: np.ndarray) -> np.ndarray:
        """Lipschitz modulus omega(t) = L_eff t valid on the whole real line."""
        return self.effective_lipschitz * np.asarray(t, dtype=float)

    def power_modulus(self, t: np.ndarray) -> np.ndarray:
        """Power-law modulus L t^alpha; bounds |f(u) - f(0)| by power_modulus(|u|)."""
        return self.lipschitz * np.asarray(t, dtype=float) ** self.alpha
