"""Galerkin truncation of the spatial-dynamics eigenvalue problem.

The state ``W = (rho, psi, psi_xi, psi_xixi)`` is expanded in the basis vectors
``U_M^k`` (``M = 0..N``, ``k = 1..4``) and the coordinate ``(M, k)`` is stored at
index ``4*M + (k - 1)``.  The truncated matrix is

    A_N(xi; kappa) = blockdiag(A_0(kappa), ..., A_N(kappa)) + B(xi; kappa)

where the asymptotic blocks are exact and ``B`` is the Galerkin projection of
the difference between the full operator at the wave and at the quiescent
state.  Both pieces are affine in ``kappa`` and are stored as such.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .stratification import (
    ModeTable,
    Stratification,
    critical_speed,
    gauss_legendre,
    mode_eigenvalue,
    slot_function,
)

__all__ = [
    "asymptotic_block",
    "asymptotic_matrix",
    "OperatorFieldSet",
    "apply_RS",
    "TruncatedOperator",
    "galerkin_entry",
    "assemble_A",
    "coordinate_index",
]

SIGN_VARIANTS = ("derived", "flipped")


def coordinate_index(M: int, k: int) -> int:
    """Position of the coefficient of ``U_M^k`` in the truncated state vector."""
    return 4 * M + (k - 1)


def _check_speed(strat: Stratification, c: float):
    if not c > critical_speed(strat):
        raise ValueError(f"wave speed c={c} must exceed the critical speed c0={critical_speed(strat)}")


def _block_parts(strat: Stratification, c: float, M: int, variant: str = "derived"):
    """Return ``(A_M(0), dA_M/dkappa)`` as real 4x4 arrays."""
    if variant not in SIGN_VARIANTS:
        raise ValueError(f"unknown sign variant {variant!r}")
    d = strat.delta
    lam = strat.lam(c)
    lam_m = mode_eigenvalue(strat, M)
    entry43 = d * (lam_m - lam) if variant == "derived" else d * (lam - lam_m)
    A0 = np.array(
        [
            [0.0, 0.0, -1.0 / c, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, entry43, 0.0],
        ]
    )
    A1 = np.zeros((4, 4))
    A1[0, 0] = 1.0 / c
    A1[3, 0] = d * lam
    A1[3, 1] = -lam_m * d / c
    A1[3, 3] = 1.0 / c
    return A0, A1


def asymptotic_block(strat: Stratification, c: float, kappa: complex, M: int, variant: str = "derived"):
    """The 4x4 block ``A_M(kappa)`` of the quiescent-state operator.

    ``variant="derived"`` uses ``delta*(lambda_M - lambda)`` in entry (4,3), which
    is what the action of the quiescent operator on ``U_M^3`` produces.
    ``variant="flipped"`` flips that sign and is kept for regression tests.
    """
    _check_speed(strat, c)
    A0, A1 = _block_parts(strat, c, M, variant)
    return A0 + kappa * A1


def asymptotic_matrix(strat: Stratification, c: float, kappa: complex, N: int, variant: str = "derived"):
    """Block-diagonal ``A_0(kappa) + ... + A_N(kappa)``."""
    _check_speed(strat, c)
    A0, A1 = _asymptotic_parts(strat, c, N, variant)
    return A0 + kappa * A1


def _asymptotic_parts(strat, c, N, variant="derived"):
    d = 4 * N + 4
    A0 = np.zeros((d, d))
    A1 = np.zeros((d, d))
    for M in range(N + 1):
        b0, b1 = _block_parts(strat, c, M, variant)
        sl = slice(4 * M, 4 * M + 4)
        A0[sl, sl] = b0
        A1[sl, sl] = b1
    return A0, A1


@dataclass(frozen=True)
class OperatorFieldSet:
    """Coefficient functions of the row-one and row-four operators on the y-grid.

    Every entry is an array over the trailing quadrature axis (leading axes index
    ``xi``).  Row-one coefficients already include the ``1/(psi_y - c)`` factor and
    row-four coefficients include ``1/((psi_y - c) rho)``.  Keys ending in ``_k``
    are the parts multiplying ``kappa``.
    """

    coef: dict

    @classmethod
    def from_profile_fields(cls, pf, g: float) -> "OperatorFieldSet":
        p, r = pf.psi, pf.rho
        D = pf.psi_y_minus_c()
        if np.any(D == 0) or np.any(r[(0, 0)] == 0) or not np.all(np.isfinite(D)):
            raise ZeroDivisionError("psi_y - c or rho vanishes: the profile is not regular")
        if np.any(D >= 0):
            raise ZeroDivisionError("psi_y - c must stay negative on the grid")
        ps_x, ps_xy, ps_yy = p[(1, 0)], p[(1, 1)], p[(0, 2)]
        ps_xx, ps_xyy, ps_xxx = p[(2, 0)], p[(1, 2)], p[(3, 0)]
        ps_yyy, ps_xxy = p[(0, 3)], p[(2, 1)]
        rho, rho_x, rho_y = r[(0, 0)], r[(1, 0)], r[(0, 1)]
        iD = 1.0 / D
        iDr = iD / rho
        c = {}
        # row one: (psi_y - c) rho_xi = (-kappa + psi_xi d_y) W1 - rho_xi d_y W2 + rho_y W3
        c["R1_1"] = ps_x * iD
        c["R1_0_k"] = -iD
        c["R2_1"] = -rho_x * iD
        c["R3_0"] = rho_y * iD
        # row four
        c["S1_0"] = (-D * (ps_xyy + ps_xxx) + ps_x * (ps_yyy + ps_xxy)) * iDr
        c["S1_0_k"] = (-iD * (g + ps_x * ps_xy) + ps_xx) * iDr
        c["S1_1"] = (-D * ps_xy + ps_x * ps_yy - ps_x * ps_xx + iD * (g * ps_x + ps_x**2 * ps_xy)) * iDr
        c["S2_1"] = (
            -rho_y * ps_xy - rho * ps_xyy - rho * ps_xxx - iD * (g * rho_x + rho_x * ps_x * ps_xy)
        ) * iDr
        c["S2_1_k"] = -rho_y * iDr
        c["S2_2"] = rho_y * ps_x * iDr
        c["S2_2_k"] = -rho * iDr
        c["S2_3"] = rho * ps_x * iDr
        c["S3_0"] = (
            rho_y * ps_yy
            + rho_x * ps_xy
            + rho * ps_yyy
            + rho * ps_xxy
            - rho_y * ps_xx
            + iD * (g * rho_y + rho_y * ps_x * ps_xy)
        ) * iDr
        c["S3_0_k"] = -rho_x * iDr
        c["S3_1"] = (-rho_y * D + rho_x * ps_x) * iDr
        c["S3_2"] = -rho * D * iDr
        c["S4_0"] = -rho_x * D * iDr
        c["S4_0_k"] = -rho * iDr
        c["S4_1"] = rho * ps_x * iDr
        return cls(coef=c)


# (row, slot k) -> list of (coefficient key, derivative order of the slot function)
_ROW_TERMS = {
    (1, 1): [("R1_1", 1), ("R1_0_k", 0)],
    (1, 2): [("R2_1", 1)],
    (1, 3): [("R3_0", 0)],
    (1, 4): [],
    (4, 1): [("S1_0", 0), ("S1_0_k", 0), ("S1_1", 1)],
    (4, 2): [("S2_1", 1), ("S2_1_k", 1), ("S2_2", 2), ("S2_2_k", 2), ("S2_3", 3)],
    (4, 3): [("S3_0", 0), ("S3_0_k", 0), ("S3_1", 1), ("S3_2", 2)],
    (4, 4): [("S4_0", 0), ("S4_0_k", 0), ("S4_1", 1)],
}


def _row_action_parts(fields: OperatorFieldSet, row: int, k: int, slot_derivs):
    """Return ``(kappa^0 part, kappa^1 part)`` of a row action on one slot function.

    ``slot_derivs[j]`` holds the j-th y-derivative of the slot function, with
    trailing axes broadcast against the field arrays.
    """
    part0 = 0.0
    part1 = 0.0
    for key, order in _ROW_TERMS[(row, k)]:
        term = fields.coef[key] * slot_derivs[order]
        if key.endswith("_k"):
            part1 = part1 + term
        else:
            part0 = part0 + term
    return part0, part1


def apply_RS(fields: OperatorFieldSet, kappa: complex, k: int, L: int, strat: Stratification, y):
    """Row-one and row-four actions of the full operator on ``U_L^k``.

    ``fields`` must be sampled at the points ``y``.  Returns the two grid
    functions ``(row_one, row_four)``.
    """
    derivs = [slot_function(strat, L, k, y, j) for j in range(4)]
    out = []
    for row in (1, 4):
        p0, p1 = _row_action_parts(fields, row, k, derivs)
        val = p0 + kappa * p1
        out.append(np.broadcast_to(val, np.broadcast_shapes(np.shape(val), np.shape(y))).copy())
    return tuple(out)


class TruncatedOperator:
    """Order-``N`` truncation of the eigenvalue problem about a wave profile.

    Parameters
    ----------
    profile:
        Any object with ``strat``, ``c``, ``decay_rate`` and a ``fields(xi, y)``
        method (``WaveProfile`` or ``TabulatedProfile``).
    speed:
        Overrides the wave speed (needed for the quiescent profile ``eps = 0``
        whose nominal speed equals the critical speed).
    cache, cache_step:
        Tabulate the ``xi``-dependent part on a uniform grid and interpolate it
        with cubic splines instead of assembling afresh.
    """

    def __init__(
        self,
        profile,
        N: int,
        nodes: int = 128,
        speed: float | None = None,
        cache: bool = False,
        cache_step: float | None = None,
        variant: str = "derived",
    ):
        if N < 0 or int(N) != N:
            raise ValueError("N must be a nonnegative integer")
        self.profile = profile
        self.strat = profile.strat
        self.N = int(N)
        self.dim = 4 * self.N + 4
        self.c = float(profile.c if speed is None else speed)
        _check_speed(self.strat, self.c)
        self.grid = gauss_legendre(nodes)
        self.table = ModeTable(self.strat, self.N + 1, self.grid)
        self.variant = variant
        self._asym0, self._asym1 = _asymptotic_parts(self.strat, self.c, self.N, variant)
        y = self.grid.nodes
        self._proj = {
            1: -self.grid.weights[None, :] * self.table.phi[0],
            4: (self.grid.weights * -self.strat.drho(y))[None, :] * self.table.phi[0],
        }
        self._quiescent = self._galerkin_rows(self._quiescent_fields())
        self._cache = None
        if cache:
            self._build_cache(cache_step)

    @property
    def decay_rate(self) -> float:
        return self.profile.decay_rate

    def default_length(self) -> float:
        """Default half-length ``40/decay_rate`` of the truncated xi-domain."""
        return 40.0 / self.decay_rate

    def _quiescent_fields(self):
        from .profile import PARTIALS, ProfileFields

        y = self.grid.nodes
        zero = np.zeros_like(y)
        psi = {key: zero for key in PARTIALS}
        rho = {key: zero for key in PARTIALS}
        rho[(0, 0)] = self.strat.rho(y)
        rho[(0, 1)] = self.strat.rho(y, 1)
        rho[(0, 2)] = self.strat.rho(y, 2)
        rho[(0, 3)] = self.strat.rho(y, 3)
        pf = ProfileFields(c=self.c, psi=psi, rho=rho)
        return OperatorFieldSet.from_profile_fields(pf, self.strat.g)

    def fields(self, xi) -> OperatorFieldSet:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        pf = self.profile.fields(xi[:, None], self.grid.nodes[None, :])
        pf = type(pf)(c=self.c, psi=pf.psi, rho=pf.rho)
        return OperatorFieldSet.from_profile_fields(pf, self.strat.g)

    def _galerkin_rows(self, fields: OperatorFieldSet):
        """Projected rows one and four: arrays ``[..., part, row, M, (L,k)]``."""
        tab = self.table
        n = self.N + 1
        # slot derivatives shaped (L, Q) per order, broadcast against (X, 1, Q)
        slot = {1: tab.slot1, 2: tab.phi, 3: tab.phi, 4: tab.phi}
        blocks = {}
        for row in (1, 4):
            cols0, cols1 = [], []
            coef = {key: np.asarray(v)[..., None, :] for key, v in fields.coef.items()}
            shape = np.broadcast_shapes(coef["R3_0"].shape, tab.phi[0].shape)
            for k in (1, 2, 3, 4):
                p0, p1 = _row_action_parts(OperatorFieldSet(coef), row, k, slot[k])
                cols0.append(np.broadcast_to(p0, shape))
                cols1.append(np.broadcast_to(p1, shape))
            # (..., L, k, Q)
            V0 = np.stack(cols0, axis=-2)
            V1 = np.stack(cols1, axis=-2)
            P = self._proj[row]
            blocks[row] = (
                np.einsum("mq,...lkq->...mlk", P, V0),
                np.einsum("mq,...lkq->...mlk", P, V1),
            )
        batch = blocks[1][0].shape[:-3]
        out = np.zeros(batch + (2, 2, n, 4 * n))
        for i, row in enumerate((1, 4)):
            for part in (0, 1):
                out[..., part, i, :, :] = blocks[row][part].reshape(batch + (n, 4 * n))
        return out

    def perturbation_parts(self, xi):
        """``(B0, B1)`` with ``B(xi; kappa) = B0 + kappa*B1``, batched over ``xi``."""
        xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
        if self._cache is not None:
            B0, B1 = self._cached_parts(xi_arr)
        else:
            G = self._galerkin_rows(self.fields(xi_arr)) - self._quiescent
            B0, B1 = self._scatter(G)
        if np.ndim(xi) == 0:
            return B0[0], B1[0]
        return B0, B1

    def _scatter(self, G):
        n = self.N + 1
        batch = G.shape[:-4]
        B = np.zeros((2,) + batch + (self.dim, self.dim))
        rows1 = [coordinate_index(M, 1) for M in range(n)]
        rows4 = [coordinate_index(M, 4) for M in range(n)]
        for part in (0, 1):
            B[part][..., rows1, :] = G[..., part, 0, :, :]
            B[part][..., rows4, :] = G[..., part, 1, :, :]
        return B[0], B[1]

    def split(self, xi):
        """``(A0, A1)`` with ``A_N(xi; kappa) = A0 + kappa*A1``."""
        B0, B1 = self.perturbation_parts(xi)
        return self._asym0 + B0, self._asym1 + B1

    def assemble(self, xi, kappa):
        A0, A1 = self.split(xi)
        return A0 + kappa * A1

    def asymptotic(self, kappa):
        return self._asym0 + kappa * self._asym1

    def asymptotic_parts(self):
        return self._asym0.copy(), self._asym1.copy()

    def quiescent_projection_parts(self):
        """Galerkin projection of the full operator at the quiescent state.

        Rows one and four come from quadrature of the row operators; rows two and
        three are the shift rows.  Agreement with ``asymptotic_parts`` checks the
        closed-form blocks against the operator definition.
        """
        B0, B1 = self._scatter(self._quiescent)
        A0, A1 = self.asymptotic_parts()
        for M in range(self.N + 1):
            for r in (coordinate_index(M, 1), coordinate_index(M, 4)):
                A0[r], A1[r] = B0[r], B1[r]
        return A0, A1

    def _build_cache(self, step):
        from scipy.interpolate import CubicSpline

        span = self.default_length()
        if step is None:
            step = span / 2000.0
        nx = int(np.ceil(2 * span / step)) + 1
        grid = np.linspace(-span, span, nx)
        G = self._galerkin_rows(self.fields(grid)) - self._quiescent
        B0, B1 = self._scatter(G)
        self._cache = (span, CubicSpline(grid, B0, axis=0), CubicSpline(grid, B1, axis=0))

    def _cached_parts(self, xi):
        span, s0, s1 = self._cache
        inside = np.abs(xi) <= span
        B0 = np.zeros(xi.shape + (self.dim, self.dim))
        B1 = np.zeros_like(B0)
        B0[inside] = s0(xi[inside])
        B1[inside] = s1(xi[inside])
        return B0, B1


def galerkin_entry(truncop: TruncatedOperator, xi: float, kappa: complex, M: int, l: int, L: int, k: int) -> complex:
    """The perturbation entry ``<B U_L^k, U_M^l>`` at ``(xi, kappa)``."""
    if not (0 <= M <= truncop.N and 0 <= L <= truncop.N):
        raise IndexError("mode index exceeds the truncation order")
    if l not in (1, 2, 3, 4) or k not in (1, 2, 3, 4):
        raise IndexError("slot indices must be in 1..4")
    B0, B1 = truncop.perturbation_parts(float(xi))
    i, j = coordinate_index(M, l), coordinate_index(L, k)
    return complex(B0[i, j] + kappa * B1[i, j])


def assemble_A(truncop: TruncatedOperator, xi: float, kappa: complex):
    """The truncated coefficient matrix at ``(xi, kappa)``."""
    return truncop.assemble(float(xi), kappa)
