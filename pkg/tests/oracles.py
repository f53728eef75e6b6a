"""Independent reference computations used by the tests."""
from __future__ import annotations

import numpy as np
import sympy as sp
from scipy.integrate import solve_ivp
from scipy.optimize import brentq


def sturm_liouville_eigenvalue(p, w, n: int, tol: float = 1e-13) -> float:
    """``n``-th Dirichlet eigenvalue of ``(p u')' + lam w u = 0`` on ``[0, 1]``.

    Prüfer shooting: with ``p u' = r cos(theta)``, ``u = r sin(theta)`` the phase obeys
    ``theta' = cos^2/p + lam w sin^2`` and the ``n``-th eigenvalue is the unique
    ``lam`` with ``theta(1) = (n+1) pi``.  Only ``p`` and ``w`` are used, so the
    oracle does not know the closed-form eigenfunctions.
    """

    def phase_end(lam):
        def rhs(y, th):
            s, c = np.sin(th), np.cos(th)
            return c * c / p(y) + lam * w(y) * s * s

        sol = solve_ivp(rhs, (0.0, 1.0), [0.0], method="DOP853", rtol=tol, atol=tol)
        return sol.y[0, -1] - (n + 1) * np.pi

    lo, hi = 0.0, 1.0
    while phase_end(hi) < 0:
        lo, hi = hi, 2 * hi
    return brentq(phase_end, lo, hi, xtol=1e-14, rtol=1e-15)


def exponential_sl_eigenvalue(delta: float, n: int) -> float:
    """Oracle eigenvalue for ``rho_bar = exp(-delta y)``: ``p = rho_bar``, ``w = -rho_bar'``."""
    return sturm_liouville_eigenvalue(
        lambda y: np.exp(-delta * y),
        lambda y: delta * np.exp(-delta * y),
        n,
    )


def _exact(v):
    v = complex(v)
    return sp.Rational(v.real) + sp.I * sp.Rational(v.imag)


def symbolic_block_charpoly(delta, lam, lam_m, c, kappa):
    """Coefficients (highest first) of ``det(mu I - A_M)`` from a sympy determinant."""
    mu = sp.Symbol("mu")
    d, l, lm, cc, k = (_exact(v) for v in (delta, lam, lam_m, c, kappa))
    A = sp.Matrix(
        [
            [k / cc, 0, -1 / cc, 0],
            [0, 0, 1, 0],
            [0, 0, 0, 1],
            [d * l * k, -k * lm * d / cc, d * (lm - l), k / cc],
        ]
    )
    poly = sp.Poly(sp.expand((mu * sp.eye(4) - A).det(method="berkowitz")), mu)
    return poly.all_coeffs()


def central_difference(f, x, h, order=1):
    """Fourth-order central finite difference of ``f`` at ``x``."""
    if order == 1:
        return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)
    if order == 2:
        return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h)
    raise ValueError(order)
