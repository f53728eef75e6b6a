"""Evans functions of the truncated problems.

The stable frame is integrated backward from ``xi = +L`` and the unstable frame
forward from ``xi = -L``, both seeded on analytic asymptotic frames.  The
exponential growth of each frame is factored out through the sum of its
asymptotic eigenvalues, so the value at ``xi = 0``

    D(kappa) = det[stable frame | unstable frame]

is analytic in ``kappa`` and real for real ``kappa``.  Two frame realizations are
provided: continuous orthogonalization with the log-determinant of the
triangular factors accumulated separately, and propagation of the wedge
(exterior power) of each frame through compound matrices.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import linalg
from scipy.integrate import solve_ivp

from .spectrum import asymptotic_frames, splitting_certificate

__all__ = [
    "EvansConfig",
    "EvansSample",
    "EvansEngine",
    "boundary_frames",
    "evans_value",
    "evans_derivative",
    "finite_difference_derivative",
    "Contour",
    "circle",
    "half_annulus",
    "winding_number",
    "WindingResult",
    "ContourTooCloseError",
    "additive_compound",
    "multiplicative_compound",
    "compound_minors",
    "translational_speed_modes",
]

METHODS = ("orthogonal", "exterior")
INTEGRATORS = ("magnus", "adaptive")
_GAUSS = np.sqrt(3.0) / 6.0


@dataclass(frozen=True)
class EvansConfig:
    """Numerical settings of an Evans evaluation.

    ``L=None`` selects ``40/decay_rate``.  ``step`` is the Magnus step length.
    ``kappa_ref=None`` selects ``c/2``; ``normalize=False`` returns raw values.
    """

    L: float | None = None
    step: float = 0.25
    method: str = "orthogonal"
    integrator: str = "magnus"
    rtol: float = 1e-8
    atol: float = 1e-10
    kappa_ref: float | None = None
    normalize: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        if self.step <= 0 or (self.L is not None and self.L <= 0):
            raise ValueError("step and L must be positive")


@dataclass
class EvansSample:
    kappa: complex
    value: complex
    method: str
    condition: float
    log_scale: complex = 0j


@lru_cache(maxsize=None)
def _subsets(n: int, k: int):
    return tuple(itertools.combinations(range(n), k))


@lru_cache(maxsize=None)
def _pairing_signs(n: int, k: int):
    subs = _subsets(n, k)
    comp_index = {s: i for i, s in enumerate(_subsets(n, n - k))}
    idx = []
    signs = []
    for s in subs:
        rest = tuple(i for i in range(n) if i not in s)
        idx.append(comp_index[rest])
        signs.append((-1) ** (sum(s) - k * (k - 1) // 2))
    return np.array(idx), np.array(signs, dtype=float)


def wedge(frame):
    """Plucker coordinates of the columns of ``frame`` (all maximal minors)."""
    n, k = frame.shape
    subs = np.array(_subsets(n, k))
    return np.linalg.det(frame[subs, :])


def compound_minors(P, k: int):
    """``k``-th compound matrix by direct evaluation of all ``k x k`` minors."""
    n = P.shape[-1]
    subs = np.array(_subsets(n, k))
    rows = P[..., subs[:, None, :, None], subs[None, :, None, :]]
    return np.linalg.det(rows)


def multiplicative_compound(P, k: int):
    """``k``-th compound matrix: minors of ``P`` over row/column subsets.

    For ``k > n/2`` Jacobi's complementary minor identity
    ``det P[I,J] = det P * (-1)^(|I|+|J|) * det P^-1[J^c, I^c]`` replaces the
    large minors by ``(n-k)``-minors of the inverse.
    """
    n = P.shape[-1]
    if 2 * k <= n or k == n:
        return compound_minors(P, k)
    idx, _ = _pairing_signs(n, k)
    signs = np.array([(-1) ** sum(s) for s in _subsets(n, k)], dtype=float)
    dual = compound_minors(np.linalg.inv(P), n - k)
    out = dual[..., idx[None, :], idx[:, None]] * np.outer(signs, signs)
    return np.linalg.det(P)[..., None, None] * out


def additive_compound(A, k: int):
    """``k``-th additive compound, the generator of ``wedge`` under ``x' = A x``."""
    n = A.shape[-1]
    subs = _subsets(n, k)
    pos = {s: i for i, s in enumerate(subs)}
    out = np.zeros(A.shape[:-2] + (len(subs), len(subs)), dtype=np.result_type(A, float))
    for j, s in enumerate(subs):
        for slot, col in enumerate(s):
            for row in range(n):
                if row != col and row in s:
                    continue
                t = list(s)
                t[slot] = row
                sign = 1
                # restore ascending order; the permutation parity gives the sign
                ts = sorted(t)
                perm = [t.index(v) for v in ts]
                inv = sum(1 for a in range(k) for b in range(a + 1, k) if perm[a] > perm[b])
                if inv % 2:
                    sign = -1
                out[..., pos[tuple(ts)], j] += sign * A[..., row, col]
    return out


def pair_wedges(xs, xu, n: int, k: int):
    """``det[F_s | F_u]`` from the wedge coordinates of the two frames."""
    idx, signs = _pairing_signs(n, k)
    return np.sum(signs * xs * xu[idx])


class EvansEngine:
    """Evaluates ``D_N(kappa)`` for a fixed truncated operator.

    The coefficient parts ``A0 + kappa*A1`` are assembled once at the Gauss
    points of both half-grids; each evaluation then costs one batch of matrix
    exponentials per half-line.
    """

    def __init__(self, truncop, config: EvansConfig | None = None):
        self.op = truncop
        self.config = config or EvansConfig()
        self.L = float(self.config.L or truncop.default_length())
        self.dim = truncop.dim
        self.N = truncop.N
        n_steps = max(1, int(np.ceil(self.L / self.config.step)))
        self.h = self.L / n_steps
        self.n_steps = n_steps
        # backward half-grid from +L to 0 and forward half-grid from -L to 0
        t = self.L - self.h * np.arange(n_steps)
        mids = t - 0.5 * self.h
        gauss = np.stack([mids + _GAUSS * self.h, mids - _GAUSS * self.h], axis=1)
        self._plus = self._parts(gauss)
        self._minus = self._parts(-gauss)
        self._ref_value = None
        self._coarse = None

    def _parts(self, pts):
        A0, A1 = self.op.split(pts.ravel())
        shape = pts.shape + (self.dim, self.dim)
        return A0.reshape(shape), A1.reshape(shape)

    def _omegas(self, parts, kappa, signed_h):
        A0, A1 = parts
        A = A0 + kappa * A1
        Aa, Ab = A[:, 0], A[:, 1]
        # fourth-order Magnus; first Gauss point is the one met first
        comm = Ab @ Aa - Aa @ Ab
        return 0.5 * signed_h * (Aa + Ab) + (np.sqrt(3.0) / 12.0) * signed_h**2 * comm

    def frames_at_infinity(self, kappa):
        return asymptotic_frames(self.op.strat, self.op.c, kappa, self.N)

    def _propagators(self, kappa, shift_s, shift_u):
        eye = np.eye(self.dim)
        om_s = self._omegas(self._plus, kappa, -self.h) - (-self.h) * shift_s * eye
        om_u = self._omegas(self._minus, kappa, self.h) - self.h * shift_u * eye
        return linalg.expm(om_s), linalg.expm(om_u)

    def boundary_frames(self, kappa):
        """Orthonormal stable/unstable frames at 0 and their log scale factors."""
        kappa = complex(kappa)
        Vs, Vu, sig_s, sig_u = self.frames_at_infinity(kappa)
        ks, ku = Vs.shape[1], Vu.shape[1]
        if self.config.integrator == "adaptive":
            raise ValueError("boundary frames are produced by the Magnus integrator only")
        Ps, Pu = self._propagators(kappa, sig_s / ks, sig_u / ku)
        Qs, Rs = np.linalg.qr(Vs)
        Qu, Ru = np.linalg.qr(Vu)
        log_s = np.sum(np.log(np.diag(Rs).astype(complex)))
        log_u = np.sum(np.log(np.diag(Ru).astype(complex)))
        for step in range(self.n_steps):
            Qs, Rs = np.linalg.qr(Ps[step] @ Qs)
            Qu, Ru = np.linalg.qr(Pu[step] @ Qu)
            log_s += np.sum(np.log(np.diag(Rs).astype(complex)))
            log_u += np.sum(np.log(np.diag(Ru).astype(complex)))
        return Qs, Qu, log_s, log_u

    def _raw_orthogonal(self, kappa):
        Qs, Qu, log_s, log_u = self.boundary_frames(kappa)
        M = np.hstack([Qs, Qu])
        det = np.linalg.det(M)
        cond = float(np.linalg.cond(M))
        return det, log_s + log_u, cond

    def _raw_exterior(self, kappa):
        kappa = complex(kappa)
        Vs, Vu, sig_s, sig_u = self.frames_at_infinity(kappa)
        ks, ku = Vs.shape[1], Vu.shape[1]
        Ps, Pu = self._propagators(kappa, sig_s / ks, sig_u / ku)
        xs = wedge(Vs)
        xu = wedge(Vu)
        log_s = log_u = 0j
        for step in range(self.n_steps):
            xs = multiplicative_compound(Ps[step], ks) @ xs
            xu = multiplicative_compound(Pu[step], ku) @ xu
            ns, nu = np.linalg.norm(xs), np.linalg.norm(xu)
            xs, xu = xs / ns, xu / nu
            log_s += np.log(ns)
            log_u += np.log(nu)
        val = pair_wedges(xs, xu, self.dim, ks)
        return val, log_s + log_u, float("nan")

    def _raw_adaptive(self, kappa):
        """Compound-matrix ODE integrated with an adaptive Runge-Kutta scheme."""
        kappa = complex(kappa)
        cfg = self.config
        Vs, Vu, sig_s, sig_u = self.frames_at_infinity(kappa)
        ks, ku = Vs.shape[1], Vu.shape[1]
        op = self.op

        def rhs_factory(k, sig):
            def rhs(xi, x):
                A = op.assemble(xi, kappa)
                return additive_compound(A, k) @ x - sig * x

            return rhs

        sol_s = solve_ivp(
            rhs_factory(ks, sig_s), (self.L, 0.0), wedge(Vs), method="DOP853", rtol=cfg.rtol, atol=cfg.atol
        )
        sol_u = solve_ivp(
            rhs_factory(ku, sig_u), (-self.L, 0.0), wedge(Vu), method="DOP853", rtol=cfg.rtol, atol=cfg.atol
        )
        if not (sol_s.success and sol_u.success):
            raise RuntimeError("adaptive integration failed")
        val = pair_wedges(sol_s.y[:, -1], sol_u.y[:, -1], self.dim, ks)
        return val, 0j, float("nan")

    def raw_value(self, kappa):
        """Unnormalized ``D`` as ``(mantissa, log scale, condition)``."""
        if self.config.integrator == "adaptive":
            return self._raw_adaptive(kappa)
        if self.config.method == "orthogonal":
            return self._raw_orthogonal(kappa)
        return self._raw_exterior(kappa)

    @property
    def kappa_ref(self) -> float:
        return float(self.op.c / 2 if self.config.kappa_ref is None else self.config.kappa_ref)

    def _reference(self):
        if self._ref_value is None:
            mant, logs, _ = self.raw_value(self.kappa_ref)
            if mant == 0:
                raise ZeroDivisionError("Evans function vanishes at the reference point")
            self._ref_value = (mant, logs)
        return self._ref_value

    def sample(self, kappa) -> EvansSample:
        mant, logs, cond = self.raw_value(kappa)
        if self.config.normalize:
            rm, rl = self._reference()
            value = mant / rm * np.exp(logs - rl)
        else:
            value = mant * np.exp(logs)
        return EvansSample(complex(kappa), complex(value), self.config.method, cond, complex(logs))

    def value(self, kappa) -> complex:
        return self.sample(kappa).value

    def values(self, kappas):
        return np.array([self.value(k) for k in kappas])

    def error_estimate(self, kappa) -> float:
        """``|D_h - D_2h|`` from an engine with doubled step; the fourth-order
        scheme makes this a conservative bound on the error of ``D_h``."""
        if self._coarse is None:
            self._coarse = EvansEngine(self.op, replace(self.config, step=2 * self.h, L=self.L))
        return float(abs(self.value(kappa) - self._coarse.value(kappa)))


def boundary_frames(truncop, kappa, config: EvansConfig | None = None):
    """Stable and unstable orthonormal frames at ``xi = 0`` with log scale factors.

    Raises ``ValueError`` if the asymptotic splitting fails at ``kappa``.
    """
    _require_splitting(truncop, kappa)
    return EvansEngine(truncop, config).boundary_frames(kappa)


def _require_splitting(truncop, kappa):
    if complex(kappa) == 0:
        return
    rep = splitting_certificate(truncop.strat, truncop.c, truncop.N, [kappa])
    if not rep.passed:
        raise ValueError(f"consistent splitting fails at kappa={kappa}")


def evans_value(truncop, kappa, config: EvansConfig | None = None) -> complex:
    """Normalized ``D_N(kappa)``."""
    _require_splitting(truncop, kappa)
    return EvansEngine(truncop, config).value(kappa)


def finite_difference_derivative(func, x0, order: int, h: float):
    """Central differences with one Richardson step.

    Returns ``(estimate, error estimate)``.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")

    def central(step):
        if order == 1:
            return (func(x0 + step) - func(x0 - step)) / (2 * step)
        return (func(x0 + step) - 2 * func(x0) + func(x0 - step)) / step**2

    coarse = central(h)
    fine = central(h / 2)
    rich = (4 * fine - coarse) / 3
    return rich, abs(rich - fine)


def evans_derivative(engine: EvansEngine, kappa0, order: int = 1, h: float | None = None):
    """Richardson-extrapolated derivative of the normalized Evans function.

    Returns ``(estimate, error estimate)``.
    """
    if h is None:
        h = 0.05 * engine.op.c if engine.op.profile.epsilon in (None, 0) else 0.2 * engine.op.profile.epsilon**3
    cache = {}

    def f(k):
        key = complex(k)
        if key not in cache:
            cache[key] = engine.value(key)
        return cache[key]

    return finite_difference_derivative(f, complex(kappa0), order, h)


@dataclass
class Contour:
    """A closed piecewise path given by an initial sample of points (in order)."""

    points: np.ndarray
    label: str = ""
    pieces: list = field(default_factory=list)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        if abs(pts[0] - pts[-1]) > 1e-14 * max(1.0, np.max(np.abs(pts))):
            pts = np.append(pts, pts[0])
        self.points = pts


def circle(center, radius, n: int = 64, label: str = "") -> Contour:
    t = np.linspace(0.0, 2 * np.pi, n + 1)
    pts = center + radius * np.exp(1j * t)
    return Contour(pts, label or f"circle(center={center}, radius={radius})", [("circle", center, radius)])


def half_annulus(r_in, r_out, offset: float = 0.0, n_arc: int = 64, n_line: int = 16, label: str = "") -> Contour:
    """Boundary of ``{Re >= offset, r_in <= |z| <= r_out}`` traversed counterclockwise."""
    if not 0 <= offset < r_in < r_out:
        raise ValueError("need 0 <= offset < r_in < r_out")
    th_out = np.arcsin(offset / r_out)
    th_in = np.arcsin(offset / r_in)
    outer = r_out * np.exp(1j * np.linspace(-(np.pi / 2 - th_out), np.pi / 2 - th_out, n_arc + 1))
    top = np.linspace(outer[-1], 1j * r_in * np.cos(th_in) + offset, n_line + 1)[1:]
    inner = r_in * np.exp(1j * np.linspace(np.pi / 2 - th_in, -(np.pi / 2 - th_in), n_arc + 1))[1:]
    bottom = np.linspace(inner[-1], outer[0], n_line + 1)[1:]
    pts = np.concatenate([outer, top, inner, bottom])
    return Contour(
        pts,
        label or f"half_annulus(r_in={r_in}, r_out={r_out}, offset={offset})",
        [("half_annulus", r_in, r_out, offset)],
    )


class ContourTooCloseError(RuntimeError):
    pass


@dataclass
class WindingResult:
    winding: int
    raw_winding: float
    samples: int
    min_abs: float
    points: np.ndarray
    values: np.ndarray


def winding_number(func, contour: Contour, max_jump: float = np.pi / 4, max_refine: int = 12, floor: float = 0.0) -> WindingResult:
    """Argument-principle winding of ``func`` along ``contour``.

    Segments whose phase increment exceeds ``max_jump`` are bisected (up to
    ``max_refine`` levels).  Raises ``ContourTooCloseError`` if ``|func|`` drops
    below ``floor`` or a jump cannot be resolved.
    """
    pts = list(contour.points)
    vals = [complex(func(z)) for z in pts[:-1]]
    vals.append(vals[0])
    out_pts = [pts[0]]
    out_vals = [vals[0]]
    total = 0.0
    stack = [(pts[i], vals[i], pts[i + 1], vals[i + 1], 0) for i in range(len(pts) - 1)][::-1]
    while stack:
        z0, f0, z1, f1, level = stack.pop()
        if f0 == 0 or f1 == 0:
            raise ContourTooCloseError("the function vanishes on the contour")
        dphi = np.angle(f1 / f0)
        if abs(dphi) > max_jump:
            if level >= max_refine:
                raise ContourTooCloseError(f"unresolved phase jump near {z0}")
            zm = 0.5 * (z0 + z1)
            fm = complex(func(zm))
            stack.append((zm, fm, z1, f1, level + 1))
            stack.append((z0, f0, zm, fm, level + 1))
            continue
        total += dphi
        out_pts.append(z1)
        out_vals.append(f1)
    values = np.array(out_vals)
    min_abs = float(np.min(np.abs(values)))
    if min_abs <= floor:
        raise ContourTooCloseError(f"|D| = {min_abs:.3e} on the contour is below the error floor {floor:.3e}")
    raw = total / (2 * np.pi)
    return WindingResult(int(round(raw)), float(raw), len(values) - 1, min_abs, np.array(out_pts), values)


@dataclass
class ModeResidualReport:
    v1_residual: float
    v1_norm: float
    v2_residual: float
    v2_norm: float
    degenerate: bool

    @property
    def v1_relative(self) -> float:
        return self.v1_residual / self.v1_norm if self.v1_norm else float("nan")

    @property
    def v2_relative(self) -> float:
        denom = self.v2_norm + self.v1_norm
        return self.v2_residual / denom if denom else float("nan")


def _project_state(truncop, comps):
    """Coordinates of a sampled state ``(rho, psi, psi_xi, psi_xixi)`` in the basis.

    ``comps[k]`` has shape ``(X, Q)``; returns ``(X, dim)``.
    """
    tab = truncop.table
    w = truncop.grid.weights
    drho = truncop.strat.drho(truncop.grid.nodes)
    X = comps[0].shape[0]
    out = np.zeros((X, truncop.dim))
    phi = tab.phi[0]
    for M in range(truncop.N + 1):
        # <V, U_M^1> = -int V1 phi_M ; <V, U_M^k> = int (-rho_bar') Vk phi_M
        out[:, 4 * M] = -(comps[0] * phi[M]) @ w
        for k in (2, 3, 4):
            out[:, 4 * M + k - 1] = (comps[k - 1] * (-drho) * phi[M]) @ w
    return out


def translational_speed_modes(profile, truncop, n_points: int = 401, span: float | None = None) -> ModeResidualReport:
    """Residuals of the truncated derivative-of-profile solutions at ``kappa = 0``.

    ``v1`` is the projection of ``d/dxi`` of the wave state and ``v2`` that of
    ``d/dc``.  The residuals ``v1' - A(xi;0) v1`` and ``v2' - A(xi;0) v2 - A1(xi) v1``
    are measured in the max norm on a xi-grid, with ``v'`` computed exactly from
    the closed-form profile derivatives.
    """
    if profile.epsilon == 0:
        return ModeResidualReport(0.0, 0.0, 0.0, 0.0, True)
    if span is None:
        span = 10.0 / profile.decay_rate
    xi = np.linspace(-span, span, n_points)
    y = truncop.grid.nodes
    X, Y = xi[:, None], y[None, :]

    f = profile.fields(X, Y)
    # translational mode: xi-derivative of (rho, psi, psi_xi, psi_xixi) and its xi-derivative
    v1 = [f.rho[(1, 0)], f.psi[(1, 0)], f.psi[(2, 0)], f.psi[(3, 0)]]
    rho_xx = _rho_xixi(profile, f)
    mode = profile.strat.mode(0)
    d4 = profile.amplitude(X, 4) * mode(Y)
    dv1 = [rho_xx, f.psi[(2, 0)], f.psi[(3, 0)], d4]
    cf = profile.c_derivative_fields(X, Y)
    v2 = [cf[("rho", 0)], cf[("psi", 0)], cf[("psi", 1)], cf[("psi", 2)]]
    dv2 = [cf[("rho", 1)], cf[("psi", 1)], cf[("psi", 2)], cf[("psi", 3)]]

    c1, c1p = _project_state(truncop, v1), _project_state(truncop, dv1)
    c2, c2p = _project_state(truncop, v2), _project_state(truncop, dv2)
    A0, A1 = truncop.split(xi)
    r1 = c1p - np.einsum("xij,xj->xi", A0, c1)
    r2 = c2p - np.einsum("xij,xj->xi", A0, c2) - np.einsum("xij,xj->xi", A1, c1)
    return ModeResidualReport(
        v1_residual=float(np.max(np.abs(r1))),
        v1_norm=float(np.max(np.abs(c1))),
        v2_residual=float(np.max(np.abs(r2))),
        v2_norm=float(np.max(np.abs(c2))),
        degenerate=False,
    )


def _rho_xixi(profile, f):
    d, c = profile.strat.delta, profile.c
    F1 = d / c * f.psi[(1, 0)]
    F2 = d / c * f.psi[(2, 0)]
    return f.rho[(0, 0)] * (F2 + F1 * F1)
