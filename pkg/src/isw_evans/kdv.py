"""Small-amplitude reduction to the linearized KdV eigenvalue problem.

On the slow scale ``Xi = eps*xi`` with ``Lambda = kappa/eps**3`` the truncated
problem reduces to a ``(2N+4)``-dimensional system whose ``eps = 0`` limit
contains the linearized KdV problem about the soliton ``A`` as the subsystem
for ``(W2, W3, W4)``.  Scalar Evans functions are built from a decaying
solution ``zeta`` and an adjoint solution ``eta`` whose pairing ``eta . zeta`` is
independent of ``Xi``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import linalg

from .profile import KdvCoefficients, WaveProfile, kdv_soliton
from .spectrum import charpoly_coefficients
from .stratification import Stratification

__all__ = [
    "kdv_system_matrix",
    "gamma_fields",
    "core_indices",
    "ScaleMap",
    "ReducedSystem",
    "reduced_system_matrix",
    "AdjointPair",
    "decaying_adjoint_solutions",
    "kdv_evans",
    "reduced_evans",
    "chi_factorization_check",
    "kdv_char_poly",
    "smallest_root_certificate",
    "estimate_nu",
    "KdvEvans",
]


def kdv_system_matrix(coeffs: KdvCoefficients, Lambda: complex, Xi):
    """Companion matrix of ``s W''' + (1 + 2r A) W' + 2r A' W = Lambda W``.

    Batched over ``Xi``; returns shape ``Xi.shape + (3, 3)``.
    """
    Xi = np.asarray(Xi, dtype=float)
    r, s = coeffs.r, coeffs.s
    out = np.zeros(Xi.shape + (3, 3), dtype=complex)
    out[..., 0, 1] = 1.0
    out[..., 1, 2] = 1.0
    out[..., 2, 0] = Lambda / s - (2 * r / s) * kdv_soliton(coeffs, Xi, 1)
    out[..., 2, 1] = -1.0 / s - (2 * r / s) * kdv_soliton(coeffs, Xi)
    return out


def kdv_char_poly(coeffs: KdvCoefficients, Lambda: complex):
    """Monic ``mu^3 + mu/s - Lambda/s`` (highest first), equal to ``det(mu I - K)``."""
    s = coeffs.s
    return np.array([1.0, 0.0, 1.0 / s, -Lambda / s], dtype=complex)


def gamma_fields(coeffs: KdvCoefficients, Lambda: complex, Xi):
    """``(Gamma1, Gamma2, Gamma3)`` of the reduced ``eps = 0`` system."""
    r, s, c0 = coeffs.r, coeffs.s, coeffs.c0
    A = kdv_soliton(coeffs, Xi)
    Ad = kdv_soliton(coeffs, Xi, 1)
    g1 = -(c0 * r / (3 * s)) * Ad
    g2 = Lambda / s - (2 * r / s) * Ad
    g3 = -1.0 / s - (2 * r / s) * A
    return g1, g2, g3


def core_indices(N: int):
    """0-based positions of the slow variables: ``W1..W4`` and ``W_{4n+1}, W_{4n+2}``."""
    idx = [0, 1, 2, 3]
    for n in range(1, N + 1):
        idx += [4 * n, 4 * n + 1]
    return idx


def hyperbolic_indices(N: int):
    idx = []
    for n in range(1, N + 1):
        idx += [4 * n + 2, 4 * n + 3]
    return idx


class ScaleMap:
    """Change of variables ``w = S W`` between truncated and rescaled coordinates.

    ``S`` applies the eps-power scaling of each coordinate and the mixing
    ``W1 = W1_hat/2 - W2_hat/c0``, ``W2 = c0 W1_hat/2 + W2_hat`` of the first two.
    """

    def __init__(self, c0: float, epsilon: float, N: int):
        if epsilon <= 0:
            raise ValueError("the scale map is singular at eps = 0")
        self.c0 = float(c0)
        self.epsilon = float(epsilon)
        self.N = int(N)
        d = 4 * N + 4
        powers = np.zeros(d)
        powers[2], powers[3] = 1, 2
        for n in range(1, N + 1):
            powers[4 * n : 4 * n + 4] = [1, 1, 2, 2]
        S = np.diag(self.epsilon**powers)
        S[:2, :2] = [[0.5, -1.0 / c0], [c0 / 2, 1.0]]
        self.S = S
        self.S_inv = np.linalg.inv(S)

    def mixing_determinant(self) -> float:
        return float(np.linalg.det(self.S[:2, :2]))

    def scale(self, w):
        """Truncated coordinates to rescaled ones."""
        return self.S_inv @ w

    def unscale(self, W):
        return self.S @ W

    def slow(self, xi):
        return self.epsilon * np.asarray(xi)

    def fast(self, Xi):
        return np.asarray(Xi) / self.epsilon

    def conjugate(self, A):
        """``(1/eps) S^-1 A S``: the generator in rescaled coordinates on the slow scale."""
        return (self.S_inv @ A @ self.S) / self.epsilon


def _eliminate(M, N: int, elimination: str):
    c = core_indices(N)
    h = hyperbolic_indices(N)
    Mcc = M[..., c, :][..., :, c]
    if not h or elimination == "drop":
        return Mcc
    if elimination != "schur":
        raise ValueError("elimination must be 'schur' or 'drop'")
    Mch = M[..., c, :][..., :, h]
    Mhc = M[..., h, :][..., :, c]
    Mhh = M[..., h, :][..., :, h]
    return Mcc - Mch @ np.linalg.solve(Mhh, Mhc)


class ReducedSystem:
    """The ``(2N+4)``-dimensional reduced generator as a function of ``Xi``.

    For ``eps = 0`` the closed-form Gamma matrix is used.  For ``eps > 0`` the
    assembled truncation is conjugated through ``ScaleMap`` and the fast pairs
    are eliminated (``"schur"`` slaves them quasi-statically, ``"drop"`` ignores
    them).
    """

    def __init__(self, coeffs: KdvCoefficients, epsilon: float, N: int, truncop=None, elimination: str = "schur"):
        self.coeffs = coeffs
        self.epsilon = float(epsilon)
        self.N = int(N)
        self.dim = 2 * self.N + 4
        # positions of W2 and W4 in the core ordering
        self.pair_indices = (1, 3)
        self.elimination = elimination
        self.truncop = truncop
        if self.epsilon > 0:
            if truncop is None:
                raise ValueError("eps > 0 needs the truncated operator")
            if truncop.N != self.N:
                raise ValueError("truncation order mismatch")
            self.scale_map = ScaleMap(coeffs.c0, self.epsilon, self.N)
            self._asym = truncop.asymptotic_parts()

    @property
    def decay_rate(self) -> float:
        """Decay rate of the coefficients in ``Xi``."""
        return 1.0 / np.sqrt(-self.coeffs.s)

    def default_length(self) -> float:
        return 40.0 / self.decay_rate

    def full_parts(self, Xi):
        """Truncated ``(A0, A1)`` at ``xi = Xi/eps`` (eps > 0 only)."""
        return self.truncop.split(self.scale_map.fast(np.asarray(Xi, dtype=float)))

    def from_parts(self, A0, A1, Lambda):
        kappa = self.epsilon**3 * Lambda
        M = self.scale_map.conjugate(A0 + kappa * A1)
        return _eliminate(M, self.N, self.elimination)

    def matrices(self, Xi, Lambda):
        Xi = np.asarray(Xi, dtype=float)
        if self.epsilon == 0:
            out = np.zeros(Xi.shape + (self.dim, self.dim), dtype=complex)
            g1, g2, g3 = gamma_fields(self.coeffs, Lambda, Xi)
            out[..., 1, 2] = 1.0
            out[..., 2, 3] = 1.0
            out[..., 3, 0] = g1
            out[..., 3, 1] = g2
            out[..., 3, 2] = g3
            return out
        A0, A1 = self.full_parts(Xi)
        return self.from_parts(A0, A1, Lambda)

    def asymptotic(self, Lambda):
        if self.epsilon == 0:
            return self.matrices(np.array(1e6), Lambda)
        A0, A1 = self._asym
        return self.from_parts(A0, A1, Lambda)


def reduced_system_matrix(
    coeffs: KdvCoefficients,
    epsilon: float,
    N: int,
    Lambda: complex,
    Xi,
    strat: Stratification | None = None,
    elimination: str = "schur",
    nodes: int = 128,
):
    """The reduced generator at ``(Xi, Lambda)``; ``eps > 0`` needs ``strat``."""
    truncop = None
    if epsilon > 0:
        if strat is None:
            raise ValueError("eps > 0 needs the stratification")
        truncop = _truncation(strat, float(epsilon), int(N), nodes)
    return ReducedSystem(coeffs, epsilon, N, truncop, elimination).matrices(Xi, Lambda)


@lru_cache(maxsize=16)
def _truncation(strat: Stratification, epsilon: float, N: int, nodes: int):
    from .truncation import TruncatedOperator

    return TruncatedOperator(WaveProfile(strat, epsilon), N, nodes=nodes)


def smallest_root_certificate(matrix, tol: float = 1e-9):
    """Eigenvalue of smallest real part and its real-part gap to the others.

    Returns ``(mu, gap, ok)`` with ``ok`` true when the eigenvalue is simple and
    strictly separated (gap above ``10*tol`` relative to the spectral scale).
    """
    ev = np.linalg.eigvals(np.asarray(matrix, dtype=complex))
    order = np.argsort(ev.real)
    mu = ev[order[0]]
    gap = float(ev[order[1]].real - mu.real)
    scale = max(1.0, float(np.max(np.abs(ev))))
    return complex(mu), gap, bool(gap > 10 * tol * scale)


def _projector(M):
    """Spectral projector of the smallest-real-part eigenvalue."""
    ev, vr = np.linalg.eig(M)
    i = int(np.argmin(ev.real))
    evl, vl = np.linalg.eig(M.T)
    j = int(np.argmin(np.abs(evl - ev[i])))
    v, w = vr[:, i], vl[:, j]
    return complex(ev[i]), np.outer(v, w) / (w @ v)


@dataclass
class AdjointPair:
    """Decaying solution and adjoint solution with their asymptotic data.

    ``zeta`` and ``eta`` are sampled (with the exponential ``exp(mu*Xi)`` factored
    out) on ``grid``; ``pairing[i] = eta[i] . zeta[i]``.
    """

    Lambda: complex
    mu: complex
    Z: np.ndarray
    Y: np.ndarray
    grid: np.ndarray
    zeta: np.ndarray
    eta: np.ndarray

    @property
    def pairing(self):
        return np.einsum("ij,ij->i", self.eta, self.zeta)

    @property
    def value(self) -> complex:
        return complex(self.pairing[len(self.grid) // 2])

    @property
    def pairing_spread(self) -> float:
        p = self.pairing
        return float(np.max(np.abs(p - p[len(p) // 2])) / max(abs(p[len(p) // 2]), 1e-300))


def _magnus_omegas(mats, h):
    Aa, Ab = mats[:, 0], mats[:, 1]
    comm = Ab @ Aa - Aa @ Ab
    return 0.5 * h * (Aa + Ab) + (np.sqrt(3.0) / 12.0) * h * h * comm


class KdvEvans:
    """Scalar Evans function of a reduced (or pure KdV) system.

    ``zeta`` is integrated backward from ``+L`` and ``eta`` forward from ``-L``
    with fourth-order Magnus steps on a common grid, so the discrete pairing is
    conserved up to rounding.
    """

    def __init__(self, system, L: float | None = None, step: float = 0.02):
        self.system = system
        self.L = float(L or system.default_length())
        n = max(2, int(np.ceil(2 * self.L / step)))
        if n % 2:
            n += 1
        self.grid = np.linspace(-self.L, self.L, n + 1)
        self.h = self.grid[1] - self.grid[0]
        mids = 0.5 * (self.grid[1:] + self.grid[:-1])
        g = np.sqrt(3.0) / 6.0 * self.h
        self._gauss = np.stack([mids - g, mids + g], axis=1)
        self._pre = None
        if isinstance(system, ReducedSystem) and system.epsilon > 0:
            A0, A1 = system.full_parts(self._gauss.ravel())
            self._pre = (A0, A1)

    def _matrices(self, Lambda):
        sys = self.system
        if self._pre is not None:
            M = sys.from_parts(self._pre[0], self._pre[1], Lambda)
            return M.reshape(self._gauss.shape + M.shape[-2:])
        return sys.matrices(self._gauss, Lambda)

    def solve(self, Lambda) -> AdjointPair:
        Lambda = complex(Lambda)
        Minf = self.system.asymptotic(Lambda)
        mu, gap, ok = smallest_root_certificate(Minf)
        if not ok:
            raise ValueError(f"smallest eigenvalue is not simple at Lambda={Lambda}")
        mu, P = _projector(Minf)
        k, j = self.system.pair_indices
        Z = P[:, j].copy()
        Y = P[k, :] / P[k, j]
        mats = self._matrices(Lambda) - mu * np.eye(Minf.shape[0])
        steps = linalg.expm(_magnus_omegas(mats, self.h))
        n = len(self.grid)
        zeta = np.zeros((n, len(Z)), dtype=complex)
        eta = np.zeros((n, len(Y)), dtype=complex)
        zeta[-1] = Z
        for i in range(n - 2, -1, -1):
            zeta[i] = np.linalg.solve(steps[i], zeta[i + 1])
        eta[0] = Y
        for i in range(n - 1):
            eta[i + 1] = np.linalg.solve(steps[i].T, eta[i])
        return AdjointPair(Lambda, complex(mu), Z, Y, self.grid, zeta, eta)

    def value(self, Lambda) -> complex:
        return self.solve(Lambda).value

    __call__ = value


def decaying_adjoint_solutions(system, Lambda, L: float | None = None, step: float = 0.02) -> AdjointPair:
    """Decaying solution ``zeta`` (at ``+inf``) and adjoint ``eta`` (at ``-inf``)."""
    return KdvEvans(system, L, step).solve(Lambda)


class _KdvOnly:
    """Adapter exposing the 3x3 KdV problem with the ``ReducedSystem`` interface."""

    pair_indices = (0, 2)

    def __init__(self, coeffs: KdvCoefficients):
        self.coeffs = coeffs

    def default_length(self):
        return 40.0 * np.sqrt(-self.coeffs.s)

    def matrices(self, Xi, Lambda):
        return kdv_system_matrix(self.coeffs, Lambda, Xi)

    def asymptotic(self, Lambda):
        return kdv_system_matrix(self.coeffs, Lambda, np.array(1e6))


def kdv_evans(coeffs: KdvCoefficients, Lambda, L: float | None = None, step: float = 0.02) -> complex:
    """``D_KdV(Lambda) = eta . zeta`` for the linearized KdV problem."""
    return KdvEvans(_KdvOnly(coeffs), L, step).value(Lambda)


def kdv_evans_function(coeffs: KdvCoefficients, L: float | None = None, step: float = 0.02):
    """Reusable callable ``Lambda -> D_KdV(Lambda)``."""
    return KdvEvans(_KdvOnly(coeffs), L, step)


def reduced_evans(
    coeffs: KdvCoefficients,
    epsilon: float,
    N: int,
    Lambda,
    strat: Stratification | None = None,
    elimination: str = "schur",
    L: float | None = None,
    step: float = 0.02,
) -> complex:
    """``D_hat_eps(Lambda)`` of the reduced system."""
    truncop = _truncation(strat, float(epsilon), int(N), 128) if epsilon > 0 else None
    system = ReducedSystem(coeffs, epsilon, N, truncop, elimination)
    return KdvEvans(system, L, step).value(Lambda)


def chi_factorization_check(coeffs: KdvCoefficients, N: int, Lambda: complex, tol: float = 1e-12):
    """Compare ``det(M0 - mu I)`` with ``(-mu)^(2N+1) det(K - mu I)`` coefficientwise.

    ``M0`` and ``K`` are the asymptotic matrices of the ``eps = 0`` reduced system and
    of the KdV problem.  Returns ``(ok, residual)``.
    """
    M0 = ReducedSystem(coeffs, 0.0, N).asymptotic(Lambda)
    K = kdv_system_matrix(coeffs, Lambda, np.array(1e6))
    n = M0.shape[0]
    chi0 = (-1) ** n * charpoly_coefficients(M0)
    chik = -charpoly_coefficients(K)
    factor = np.zeros(2 * N + 2, dtype=complex)
    factor[0] = (-1) ** (2 * N + 1)
    rhs = np.polymul(factor, chik)
    res = float(np.max(np.abs(chi0 - rhs)))
    return res <= tol, res


def estimate_nu(coeffs: KdvCoefficients, R0: float = 5.0, candidates=(1.0, 0.5, 0.2, 0.1), n_samples: int = 400):
    """Largest tested margin ``nu`` with a simple smallest KdV root on ``{Re >= -nu, |Lambda| <= R0}``.

    Returns ``0.0`` if no candidate passes.
    """
    rng = np.random.default_rng(0)
    for nu in sorted(candidates, reverse=True):
        x = rng.uniform(-nu, R0, n_samples)
        y = rng.uniform(-R0, R0, n_samples)
        edge = -nu + 1j * np.linspace(-R0, R0, 41)
        pts = np.concatenate([x + 1j * y, edge])
        pts = pts[np.abs(pts) <= R0]
        ok = True
        for lam in pts:
            roots = np.roots(kdv_char_poly(coeffs, lam))
            re = np.sort(roots.real)
            if not re[1] - re[0] > 1e-8:
                ok = False
                break
        if ok:
            return float(nu)
    return 0.0
