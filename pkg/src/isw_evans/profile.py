"""Small-amplitude internal solitary wave profiles.

The stream function is taken at leading order as a separated product
``psi_c(xi, y) = a(xi) phi_0(y)`` with ``a(xi) = eps**2 A(eps*xi)``, where ``A`` is
the KdV soliton of ``s A'' + A + r A**2 = 0``.  The density follows from the
stream function through ``rho_c = rho_bar(y - psi_c/c)``, so all partial
derivatives of ``rho_c`` are obtained by the chain rule.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from numpy.polynomial import polynomial as P

from .stratification import Stratification, critical_speed, gauss_legendre, mode_eigenvalue, mode_function

__all__ = [
    "KdvCoefficients",
    "kdv_coefficients",
    "kdv_coefficients_closed_form",
    "kdv_soliton",
    "soliton_width",
    "ProfileFields",
    "WaveProfile",
    "TabulatedProfile",
    "RegularityReport",
    "check_regularity",
    "DEFAULT_EPSILON_THRESHOLD",
    "monotonicity_epsilon_bound",
    "default_epsilon_threshold",
]

DEFAULT_EPSILON_THRESHOLD = 0.25

# multi-indices (xi-order, y-order) of total order <= 3
PARTIALS = [(i, j) for n in range(4) for i in range(n + 1) for j in [n - i]]


@dataclass(frozen=True)
class KdvCoefficients:
    r: float
    s: float
    c0: float
    lambda0: float


def kdv_coefficients(strat: Stratification, nodes: int = 128, normalized: bool = True) -> KdvCoefficients:
    """KdV coefficients ``r``, ``s`` by quadrature of their integral formulas.

    ``s = -(c0/2) int rho_bar phi0^2 / int rho_bar phi0'^2`` and
    ``r = -(3/4) int rho_bar phi0'^3 / int rho_bar phi0'^2``.

    ``s`` does not depend on the scaling of ``phi0`` but ``r`` does.  With
    ``normalized=True`` the orthonormal ``phi0`` of the mode basis is used
    (the one entering the wave profile); ``normalized=False`` uses the
    unit-amplitude eigenfunction ``exp(delta y/2) sin(pi y)``.
    """
    grid = gauss_legendre(nodes)
    y = grid.nodes
    mode = strat.mode(0)
    scale = 1.0 if normalized else 1.0 / mode.norm_const
    phi = scale * mode(y)
    dphi = scale * mode(y, 1)
    rb = strat.rho(y)
    c0 = critical_speed(strat)
    den = grid.integrate(rb * dphi**2)
    s = -0.5 * c0 * grid.integrate(rb * phi**2) / den
    r = -0.75 * grid.integrate(rb * dphi**3) / den
    return KdvCoefficients(r=float(r), s=float(s), c0=c0, lambda0=mode.lambda_n)


def kdv_coefficients_closed_form(strat: Stratification, normalized: bool = True) -> KdvCoefficients:
    """Closed forms of ``r`` and ``s`` for exponential stratification.

    The classical formula for ``r`` refers to the unit-amplitude eigenfunction;
    for the orthonormal basis it picks up the factor ``sqrt(2/delta)``.
    """
    d = strat.delta
    lam0 = mode_eigenvalue(strat, 0)
    c0 = critical_speed(strat)
    s = -c0 / (2 * d * lam0)
    r = -3 * d * np.pi**3 * (np.exp(d / 2) + 1) / (2 * (d * d / 4 + np.pi**2) * (d * d / 4 + 9 * np.pi**2))
    if normalized:
        r *= np.sqrt(2.0 / d)
    return KdvCoefficients(r=float(r), s=float(s), c0=c0, lambda0=lam0)


def soliton_width(coeffs: KdvCoefficients) -> float:
    """Width ``2 sqrt(-s)`` in ``A = -3/(2r) sech^2(Xi / width)``.

    This is the width for which ``A'' = -A/s - (r/s) A^2`` holds exactly.
    """
    return 2.0 * np.sqrt(-coeffs.s)


@lru_cache(maxsize=None)
def _sech2_derivative_polys(order: int):
    # d^j/dX sech^2(X) = sech^2(X) q_j(T) with T = tanh(X), q_0 = 1 and
    # q_{j+1} = (1 - T^2) q_j' - 2 T q_j
    polys = [np.array([1.0])]
    for _ in range(order):
        q = polys[-1]
        polys.append(P.polysub(P.polymul([1.0, 0.0, -1.0], P.polyder(q)), P.polymul([0.0, 2.0], q)))
    return polys


def _sech2(x):
    # 4 e^{-2|x|} / (1 + e^{-2|x|})^2 keeps full relative accuracy in the tails
    e = np.exp(-2.0 * np.abs(x))
    return 4.0 * e / (1.0 + e) ** 2


def kdv_soliton(coeffs: KdvCoefficients, Xi, deriv_order: int = 0):
    """The KdV soliton ``A(Xi) = -3/(2r) sech^2(Xi/(2 sqrt(-s)))`` or a derivative."""
    if deriv_order < 0:
        raise ValueError("deriv_order must be nonnegative")
    amp = -1.5 / coeffs.r
    beta = 1.0 / soliton_width(coeffs)
    x = beta * np.asarray(Xi, dtype=float)
    poly = _sech2_derivative_polys(deriv_order)[deriv_order]
    return amp * beta**deriv_order * _sech2(x) * P.polyval(np.tanh(x), poly)


@dataclass(frozen=True)
class ProfileFields:
    """Partials of ``psi_c`` and ``rho_c`` keyed by ``(xi_order, y_order)``."""

    c: float
    psi: dict
    rho: dict

    def psi_y_minus_c(self):
        return self.psi[(0, 1)] - self.c


def _rho_partials(strat: Stratification, c: float, y, psi: dict) -> dict:
    # rho_c = exp(F), F = -delta*y + (delta/c) psi_c
    d = strat.delta
    F = {}
    for key, val in psi.items():
        if key == (0, 0):
            continue
        F[key] = (d / c) * val
    F[(0, 1)] = F[(0, 1)] - d
    rho = np.exp(-d * y + (d / c) * psi[(0, 0)])

    def Fd(*ax):
        return F[(ax.count(0), ax.count(1))]

    out = {(0, 0): rho}
    for key in PARTIALS:
        n = sum(key)
        if n == 0:
            continue
        ax = (0,) * key[0] + (1,) * key[1]
        if n == 1:
            out[key] = rho * Fd(*ax)
        elif n == 2:
            i, j = ax
            out[key] = rho * (Fd(i, j) + Fd(i) * Fd(j))
        else:
            i, j, k = ax
            out[key] = rho * (
                Fd(i, j, k)
                + Fd(i, j) * Fd(k)
                + Fd(i, k) * Fd(j)
                + Fd(j, k) * Fd(i)
                + Fd(i) * Fd(j) * Fd(k)
            )
    return out


def monotonicity_epsilon_bound(strat: Stratification, coeffs: KdvCoefficients | None = None, samples: int = 4001):
    """Largest ``eps`` for which the leading-order profile keeps ``rho_y < 0``.

    ``rho_y < 0`` holds iff ``psi_y < c``, i.e. ``eps**2 (A phi_0')(y) < c0 + eps**2``
    for every amplitude value between 0 and the crest ``A(0)``.  Returns ``inf``
    when the condition holds for all ``eps``.
    """
    if coeffs is None:
        coeffs = kdv_coefficients(strat)
    y = np.linspace(0.0, 1.0, samples)
    crest = -1.5 / coeffs.r
    m = float(np.max(crest * mode_function(strat, 0, y, 1)))
    if m <= 1.0:
        return np.inf
    return float(np.sqrt(coeffs.c0 / (m - 1.0)))


def default_epsilon_threshold(strat: Stratification, coeffs: KdvCoefficients | None = None) -> float:
    """``min(0.25, 0.95 * monotonicity_epsilon_bound)``."""
    return min(DEFAULT_EPSILON_THRESHOLD, 0.95 * monotonicity_epsilon_bound(strat, coeffs))


@dataclass(frozen=True)
class WaveProfile:
    """Leading-order small-amplitude ISW of speed ``c = c0 + eps**2``."""

    strat: Stratification
    epsilon: float
    coeffs: KdvCoefficients = None
    threshold: float | None = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.coeffs is None:
            object.__setattr__(self, "coeffs", kdv_coefficients(self.strat))
        if self.threshold is None:
            object.__setattr__(self, "threshold", default_epsilon_threshold(self.strat, self.coeffs))
        if self.epsilon > self.threshold:
            raise ValueError(
                f"epsilon={self.epsilon} exceeds the validity threshold {self.threshold}; "
                "the monotone-level-set hypothesis may fail"
            )

    @property
    def c(self) -> float:
        return self.coeffs.c0 + self.epsilon**2

    @property
    def decay_rate(self) -> float:
        """Exponential decay rate of the profile in ``xi``: ``eps / sqrt(-s)``."""
        return self.epsilon / np.sqrt(-self.coeffs.s)

    def amplitude(self, xi, deriv_order: int = 0):
        """``a^{(j)}(xi) = eps^{2+j} A^{(j)}(eps*xi)``."""
        eps = self.epsilon
        xi = np.asarray(xi, dtype=float)
        if eps == 0:
            return np.zeros_like(xi)
        return eps ** (2 + deriv_order) * kdv_soliton(self.coeffs, eps * xi, deriv_order)

    def amplitude_c_derivative(self, xi, deriv_order: int = 0):
        """``d/dc`` of ``a^{(j)}(xi)`` along the family ``c = c0 + eps^2``."""
        eps = self.epsilon
        xi = np.asarray(xi, dtype=float)
        if eps == 0:
            raise ValueError("the speed derivative is undefined at eps=0")
        j = deriv_order
        X = eps * xi
        # d/d eps [eps^{2+j} A^{(j)}(eps xi)], then d eps/dc = 1/(2 eps)
        d_eps = (2 + j) * eps ** (1 + j) * kdv_soliton(self.coeffs, X, j) + eps ** (2 + j) * xi * kdv_soliton(
            self.coeffs, X, j + 1
        )
        return d_eps / (2 * eps)

    def fields(self, xi, y) -> ProfileFields:
        """Partials of ``psi_c`` and ``rho_c`` up to third order at ``(xi, y)`` (broadcast)."""
        xi = np.asarray(xi, dtype=float)
        y = np.asarray(y, dtype=float)
        mode = self.strat.mode(0)
        a = [self.amplitude(xi, i) for i in range(4)]
        ph = [mode(y, j) for j in range(4)]
        psi = {(i, j): a[i] * ph[j] for (i, j) in PARTIALS}
        rho = _rho_partials(self.strat, self.c, y, psi)
        return ProfileFields(c=self.c, psi=psi, rho=rho)

    def c_derivative_fields(self, xi, y) -> dict:
        """``d/dc`` of ``(rho_c, psi_c)`` and their xi-derivatives up to order 3.

        Returns a dict with keys ``("psi", i)`` and ``("rho", i)`` for the
        ``i``-th xi-derivative.
        """
        xi = np.asarray(xi, dtype=float)
        y = np.asarray(y, dtype=float)
        mode = self.strat.mode(0)
        phi = mode(y)
        c, d = self.c, self.strat.delta
        a = [self.amplitude(xi, i) for i in range(5)]
        ac = [self.amplitude_c_derivative(xi, i) for i in range(5)]
        out = {}
        for i in range(4):
            out[("psi", i)] = ac[i] * phi
        # rho_c = rho_bar(y) exp(G), G = (d/c) a phi; d/dc rho_c = rho_c * H, H = dG/dc
        rho = self.strat.rho(y) * np.exp(d / c * a[0] * phi)
        G = [d / c * a[i] * phi for i in range(4)]
        H = [d / c * ac[i] * phi - d / c**2 * a[i] * phi for i in range(4)]
        # xi-derivatives of rho*H with rho' = rho G'
        r0, r1 = rho, rho * G[1]
        r2 = rho * (G[2] + G[1] ** 2)
        out[("rho", 0)] = r0 * H[0]
        out[("rho", 1)] = r1 * H[0] + r0 * H[1]
        out[("rho", 2)] = r2 * H[0] + 2 * r1 * H[1] + r0 * H[2]
        return out


class TabulatedProfile:
    """Profile evaluator backed by an external table of ``psi`` and ``rho``.

    The file is plain text with one header row and whitespace-separated columns
    ``xi y psi rho`` on a tensor grid (any row order).  Partials come from
    quintic tensor splines, so tables should be finely sampled.
    """

    def __init__(self, path, strat: Stratification, c: float, decay_rate: float | None = None):
        from scipy.interpolate import RectBivariateSpline

        data = np.loadtxt(Path(path), skiprows=1)
        if data.ndim != 2 or data.shape[1] != 4:
            raise ValueError("profile table needs four columns: xi y psi rho")
        xs = np.unique(data[:, 0])
        ys = np.unique(data[:, 1])
        if len(xs) * len(ys) != len(data):
            raise ValueError("profile table is not a tensor grid")
        order = np.lexsort((data[:, 1], data[:, 0]))
        psi = data[order, 2].reshape(len(xs), len(ys))
        rho = data[order, 3].reshape(len(xs), len(ys))
        self.strat = strat
        self.c = float(c)
        self.epsilon = None
        self._psi = RectBivariateSpline(xs, ys, psi, kx=5, ky=5, s=0)
        self._rho = RectBivariateSpline(xs, ys, rho, kx=5, ky=5, s=0)
        self.xi_range = (xs[0], xs[-1])
        if decay_rate is None:
            decay_rate = _fit_decay(xs, np.max(np.abs(psi), axis=1))
        self.decay_rate = float(decay_rate)

    def fields(self, xi, y) -> ProfileFields:
        xi, y = np.broadcast_arrays(np.asarray(xi, dtype=float), np.asarray(y, dtype=float))
        psi = {k: self._psi.ev(xi, y, dx=k[0], dy=k[1]) for k in PARTIALS}
        rho = {k: self._rho.ev(xi, y, dx=k[0], dy=k[1]) for k in PARTIALS}
        return ProfileFields(c=self.c, psi=psi, rho=rho)


def _fit_decay(xi, amp):
    xi = np.asarray(xi)
    amp = np.asarray(amp)
    peak = amp.max()
    if peak == 0:
        return np.inf
    sel = (xi > 0) & (amp < 1e-2 * peak) & (amp > 1e-12 * peak)
    if sel.sum() < 3:
        return np.nan
    slope = np.polyfit(xi[sel], np.log(amp[sel]), 1)[0]
    return float(-slope)


@dataclass
class RegularityReport:
    a1_finite: bool
    a2_decay_rate: float
    a2_expected: float
    a2_ok: bool
    a3_rho_y_negative: bool
    a3_psi_y_below_c: bool
    rho_in_range: bool
    max_psi_y_minus_c: float
    messages: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.a1_finite and self.a2_ok and self.a3_rho_y_negative and self.a3_psi_y_below_c and self.rho_in_range


def check_regularity(profile, xi=None, y=None) -> RegularityReport:
    """Sampled checks of smoothness, exponential decay and monotone level sets.

    Failures are recorded in the report rather than raised.
    """
    strat = profile.strat
    rate = profile.decay_rate
    if xi is None:
        span = 40.0 / rate if np.isfinite(rate) and rate > 0 else 50.0
        xi = np.linspace(-span, span, 801)
    if y is None:
        y = np.linspace(0.0, 1.0, 101)
    X, Y = np.meshgrid(np.asarray(xi, float), np.asarray(y, float), indexing="ij")
    f = profile.fields(X, Y)
    msgs = []
    a1 = all(np.all(np.isfinite(v)) for v in list(f.psi.values()) + list(f.rho.values()))
    if not a1:
        msgs.append("A1: non-finite partial derivatives")

    amp = np.max(np.abs(f.psi[(0, 0)]), axis=1)
    if np.max(amp) == 0:
        fitted, a2 = rate, True
    else:
        fitted = _fit_decay(X[:, 0], amp)
        a2 = bool(np.isfinite(fitted) and abs(fitted / rate - 1) < 0.2)
        if not a2:
            msgs.append(f"A2: fitted decay {fitted:.4g} vs expected {rate:.4g}")

    ry_neg = bool(np.all(f.rho[(0, 1)] < 0))
    margin = float(np.max(f.psi_y_minus_c()))
    below = margin < 0
    if not ry_neg:
        msgs.append("A3: rho_y changes sign (level sets not graphs)")
    if not below:
        msgs.append("A3: psi_y - c vanishes somewhere")
    rho = f.rho[(0, 0)]
    in_range = bool(np.all(rho >= strat.rho(1.0) * (1 - 1e-12)) and np.all(rho <= strat.rho(0.0) * (1 + 1e-12)))
    if not in_range:
        msgs.append("rho_c leaves [rho_bar(1), rho_bar(0)]")
    return RegularityReport(
        a1_finite=a1,
        a2_decay_rate=float(fitted),
        a2_expected=float(rate),
        a2_ok=a2,
        a3_rho_y_negative=ry_neg,
        a3_psi_y_below_c=below,
        rho_in_range=in_range,
        max_psi_y_minus_c=margin,
        messages=msgs,
    )
