"""Exponential stratification and its vertical Sturm-Liouville mode basis.

The rest density is ``rho_bar(y) = exp(-delta*y)`` on the channel ``0 < y < 1``.
The vertical operator ``(1/rho_bar') d/dy (rho_bar d/dy)`` with Dirichlet
conditions has eigenpairs

    lambda_n = (delta**2/4 + (n+1)**2 pi**2) / delta
    phi_n(y) = sqrt(2/delta) * exp(delta*y/2) * sin((n+1) pi y)

normalized so that ``int_0^1 (-rho_bar') phi_n phi_m dy = delta_nm``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "Stratification",
    "ModePair",
    "QuadratureGrid",
    "StateVector",
    "gauss_legendre",
    "mode_eigenvalue",
    "mode_function",
    "weighted_inner_product",
    "basis_vector",
    "critical_speed",
]


@dataclass(frozen=True)
class Stratification:
    """Exponential stratification ``rho_bar = exp(-delta*y)`` with gravity ``g``."""

    delta: float = 1.0
    g: float = 9.81

    def __post_init__(self):
        if not (self.delta > 0 and np.isfinite(self.delta)):
            raise ValueError(f"delta must be positive, got {self.delta!r}")
        if not (self.g > 0 and np.isfinite(self.g)):
            raise ValueError(f"g must be positive, got {self.g!r}")

    def rho(self, y, deriv_order: int = 0):
        """``d^j/dy^j rho_bar(y)``."""
        return (-self.delta) ** deriv_order * np.exp(-self.delta * np.asarray(y, dtype=float))

    def drho(self, y):
        return self.rho(y, 1)

    def mode(self, n: int) -> "ModePair":
        return ModePair.for_stratification(self, n)

    @property
    def lambda0(self) -> float:
        return mode_eigenvalue(self, 0)

    @property
    def c0(self) -> float:
        return critical_speed(self)

    def lam(self, c: float) -> float:
        """The speed parameter ``g/c**2``."""
        return self.g / c**2


@dataclass(frozen=True)
class ModePair:
    """Closed-form eigenpair ``(lambda_n, phi_n)``.

    ``phi_n(y) = norm_const * exp(growth*y) * sin(wavenumber*y)``.
    """

    n: int
    lambda_n: float
    norm_const: float
    growth: float
    wavenumber: float

    @classmethod
    def for_stratification(cls, strat: Stratification, n: int) -> "ModePair":
        if n < 0 or int(n) != n:
            raise ValueError(f"mode index must be a nonnegative integer, got {n!r}")
        n = int(n)
        k = (n + 1) * np.pi
        a = strat.delta / 2
        return cls(
            n=n,
            lambda_n=(a * a + k * k) / strat.delta,
            norm_const=float(np.sqrt(2.0 / strat.delta)),
            growth=a,
            wavenumber=float(k),
        )

    def __call__(self, y, deriv_order: int = 0):
        return _exp_sin_derivative(self.norm_const, self.growth, self.wavenumber, y, deriv_order)


def _exp_sin_derivative(amp, a, k, y, j):
    # d^j/dy^j [exp(a y) sin(k y)] = exp(a y) Im((a + ik)^j exp(iky))
    y = np.asarray(y, dtype=float)
    z = (a + 1j * k) ** j
    return amp * np.exp(a * y) * (z.real * np.sin(k * y) + z.imag * np.cos(k * y))


def mode_eigenvalue(strat: Stratification, n: int) -> float:
    """Eigenvalue ``lambda_n`` of the weighted vertical Sturm-Liouville problem."""
    return ModePair.for_stratification(strat, n).lambda_n


def mode_function(strat: Stratification, n: int, y, deriv_order: int = 0):
    """``phi_n^{(deriv_order)}(y)`` for the orthonormal mode basis.

    Raises ``ValueError`` for points outside ``[0, 1]`` or derivative orders
    above 3.
    """
    if deriv_order not in (0, 1, 2, 3):
        raise ValueError(f"deriv_order must be in 0..3, got {deriv_order!r}")
    ya = np.asarray(y, dtype=float)
    if np.any(ya < 0.0) or np.any(ya > 1.0) or not np.all(np.isfinite(ya)):
        raise ValueError("y must lie in [0, 1]")
    return strat.mode(n)(ya, deriv_order)


def slot_function(strat: Stratification, n: int, k: int, y, deriv_order: int = 0):
    """Derivatives of the nonzero component of the basis vector ``U_n^k``.

    Slot 1 carries ``rho_bar' * phi_n``; slots 2..4 carry ``phi_n``.
    """
    mp = strat.mode(n)
    if k == 1:
        # rho_bar' phi_n = -delta*C exp(-delta y/2) sin(k y)
        return _exp_sin_derivative(
            -strat.delta * mp.norm_const, -mp.growth, mp.wavenumber, y, deriv_order
        )
    if k in (2, 3, 4):
        return mp(y, deriv_order)
    raise ValueError(f"slot index must be in 1..4, got {k!r}")


def critical_speed(strat: Stratification) -> float:
    """``c0 = sqrt(g/lambda_0)``; for ``c > c0`` the speed parameter ``g/c**2 < lambda_0``."""
    return float(np.sqrt(strat.g / mode_eigenvalue(strat, 0)))


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Gauss-Legendre rule mapped to ``[0, 1]``."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.nodes)

    def integrate(self, values, axis=-1):
        return np.tensordot(values, self.weights, axes=([axis], [0]))

    def same_as(self, other: "QuadratureGrid") -> bool:
        return self is other or (
            self.size == other.size
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.weights, other.weights)
        )


_GL_CACHE: dict[int, QuadratureGrid] = {}


def gauss_legendre(n: int = 128) -> QuadratureGrid:
    if n < 2:
        raise ValueError("need at least two quadrature nodes")
    if n not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        nodes = 0.5 * (x + 1.0)
        weights = 0.5 * w
        nodes.setflags(write=False)
        weights.setflags(write=False)
        _GL_CACHE[n] = QuadratureGrid(nodes, weights)
    return _GL_CACHE[n]


@dataclass(frozen=True, eq=False)
class StateVector:
    """Four component functions ``(rho, psi, psi_xi, psi_xixi)`` sampled on a grid."""

    values: np.ndarray
    grid: QuadratureGrid = field(default_factory=gauss_legendre)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (4, self.grid.size):
            raise ValueError(f"expected shape (4, {self.grid.size}), got {v.shape}")
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: QuadratureGrid | None = None) -> "StateVector":
        grid = grid or gauss_legendre()
        return cls(np.zeros((4, grid.size)), grid)

    def __add__(self, other: "StateVector") -> "StateVector":
        _check_grids(self, other)
        return StateVector(self.values + other.values, self.grid)

    def __mul__(self, scalar) -> "StateVector":
        return StateVector(self.values * scalar, self.grid)

    __rmul__ = __mul__


def _check_grids(U: StateVector, V: StateVector):
    if not U.grid.same_as(V.grid):
        raise ValueError("state vectors live on different quadrature grids")


def weighted_inner_product(U: StateVector, V: StateVector, strat: Stratification):
    """``int (-rho_bar') (U1 V1/rho_bar'^2 + U2 V2 + U3 V3 + U4 V4) dy`` (bilinear)."""
    _check_grids(U, V)
    y = U.grid.nodes
    dr = strat.drho(y)
    integrand = U.values[0] * V.values[0] / dr**2 + np.sum(U.values[1:] * V.values[1:], axis=0)
    return U.grid.integrate(-dr * integrand)


def basis_vector(strat: Stratification, n: int, k: int, grid: QuadratureGrid | None = None) -> StateVector:
    """The basis vector ``U_n^k`` sampled on ``grid``."""
    grid = grid or gauss_legendre()
    vals = np.zeros((4, grid.size))
    vals[k - 1] = slot_function(strat, n, k, grid.nodes)
    return StateVector(vals, grid)


class ModeTable:
    """Cached samples of ``phi_n`` and slot functions on a quadrature grid."""

    def __init__(self, strat: Stratification, n_modes: int, grid: QuadratureGrid):
        self.strat = strat
        self.n_modes = n_modes
        self.grid = grid

    @cached_property
    def phi(self) -> np.ndarray:
        """Array ``[j, n, q]`` of ``phi_n^{(j)}`` at the nodes, ``j = 0..3``."""
        y = self.grid.nodes
        return np.array(
            [[self.strat.mode(n)(y, j) for n in range(self.n_modes)] for j in range(4)]
        )

    @cached_property
    def slot1(self) -> np.ndarray:
        """Array ``[j, n, q]`` of derivatives of ``rho_bar' phi_n``, ``j = 0..3``."""
        y = self.grid.nodes
        return np.array(
            [[slot_function(self.strat, n, 1, y, j) for n in range(self.n_modes)] for j in range(4)]
        )
