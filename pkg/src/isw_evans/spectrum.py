"""Spectra of the asymptotic blocks and consistent-splitting certificates."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import linalg

from .stratification import Stratification, mode_eigenvalue
from .truncation import _check_speed, asymptotic_block, asymptotic_matrix

__all__ = [
    "char_poly",
    "charpoly_coefficients",
    "RootClassification",
    "classify_roots",
    "pK_coefficients",
    "count_real_roots_pK",
    "sturm_real_root_count",
    "SubspacePair",
    "spectral_projectors",
    "asymptotic_frames",
    "SplittingSample",
    "SplittingReport",
    "splitting_certificate",
    "sobol_kappas",
    "continue_roots",
]


def char_poly(strat: Stratification, c: float, kappa: complex, M: int):
    """Coefficients (highest degree first) of ``det(mu*I - A_M(kappa))``.

    ``mu^4 - 2a mu^3 + (a^2 + delta(lambda - lambda_M)) mu^2 + 2 lambda_M delta a mu
    - a^2 lambda_M delta`` with ``a = kappa/c``.
    """
    _check_speed(strat, c)
    d = strat.delta
    lam = strat.lam(c)
    lam_m = mode_eigenvalue(strat, M)
    a = kappa / c
    return np.array(
        [1.0, -2 * a, a * a + d * (lam - lam_m), 2 * lam_m * d * a, -a * a * lam_m * d],
        dtype=complex,
    )


def charpoly_coefficients(matrix):
    """Coefficients of ``det(mu*I - matrix)`` by the division-free Berkowitz algorithm.

    Works for any numeric dtype, including ``object`` arrays of ``Fraction`` or
    sympy numbers.
    """
    A = np.asarray(matrix)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    one = A.dtype.type(1) if A.dtype != object else 1
    vec = np.array([one], dtype=A.dtype)
    for k in range(n):
        # leading principal submatrix of size k+1, partitioned around its last entry
        a = A[k, k]
        R = A[k, :k]
        C = A[:k, k]
        S = A[:k, :k]
        col = [one, -a]
        power = C
        for _ in range(k):
            col.append(-(R @ power))
            power = S @ power
        T = np.zeros((k + 2, k + 1), dtype=A.dtype if A.dtype != object else object)
        for i in range(k + 1):
            T[i : i + len(col), i] = col[: k + 2 - i]
        vec = T @ vec
    return vec


@dataclass
class RootClassification:
    stable_roots: list
    unstable_roots: list
    neutral_roots: list
    gap: float
    flagged: bool = False

    @property
    def counts(self):
        return len(self.stable_roots), len(self.unstable_roots)


def classify_roots(strat: Stratification, c: float, kappa: complex, M: int, tol: float = 1e-9) -> RootClassification:
    """Roots of the quartic via companion eigenvalues, split by the sign of Re.

    ``tol`` is relative to the largest root modulus.  A root within tolerance of
    the imaginary axis while ``Re kappa > 10*tol`` is flagged as a failure.
    """
    roots = np.roots(char_poly(strat, c, kappa, M))
    roots = roots[np.lexsort((roots.imag, roots.real))]
    scale = max(1.0, float(np.max(np.abs(roots))))
    thr = tol * scale
    stable = [complex(z) for z in roots if z.real < -thr]
    unstable = [complex(z) for z in roots if z.real > thr]
    neutral = [complex(z) for z in roots if abs(z.real) <= thr]
    gap = float(np.sort(roots.real)[1] - np.sort(roots.real)[0])
    flagged = bool(neutral) and np.real(kappa) > 10 * tol
    return RootClassification(stable, unstable, neutral, gap, flagged)


def pK_coefficients(strat: Stratification, c: float, M: int, K: float):
    """Real coefficients of ``p_K(B) = chi_M(iB; iK)`` (highest first).

    With ``K_hat = K/c``: ``B^4 - 2 K_hat B^3 + (K_hat^2 + delta(lambda_M - lambda)) B^2
    - 2 lambda_M delta K_hat B + delta lambda_M K_hat^2``.
    """
    _check_speed(strat, c)
    d = strat.delta
    lam = strat.lam(c)
    lam_m = mode_eigenvalue(strat, M)
    k = K / c
    return np.array([1.0, -2 * k, k * k + d * (lam_m - lam), -2 * lam_m * d * k, d * lam_m * k * k])


def _poly_trim(p):
    while len(p) > 1 and p[0] == 0:
        p = p[1:]
    return p


def _poly_rem(a, b):
    a = list(a)
    b = _poly_trim(list(b))
    while len(a) >= len(b) and any(a):
        if a[0] == 0:
            a.pop(0)
            continue
        q = a[0] / b[0]
        for i in range(len(b)):
            a[i] -= q * b[i]
        a.pop(0)
    return _poly_trim(a) if a else [Fraction(0)]


def _poly_deriv(p):
    n = len(p) - 1
    return [coef * (n - i) for i, coef in enumerate(p[:-1])] or [Fraction(0)]


def _poly_gcd(a, b):
    a, b = _poly_trim(list(a)), _poly_trim(list(b))
    while any(b):
        a, b = b, _poly_rem(a, b)
    lead = a[0]
    return [x / lead for x in a]


def _sign_changes(seq):
    signs = [s for s in seq if s != 0]
    return sum(1 for u, v in zip(signs, signs[1:]) if (u > 0) != (v > 0))


def _distinct_real_roots(p):
    """Number of distinct real roots of a Fraction polynomial (Sturm's theorem)."""
    p = _poly_trim(list(p))
    if len(p) <= 1:
        return 0
    chain = [p, _poly_deriv(p)]
    while len(chain[-1]) > 1 or chain[-1][0] != 0:
        r = _poly_rem(chain[-2], chain[-1])
        if not any(r):
            break
        chain.append([-x for x in r])
    # signs at -inf and +inf from leading coefficients and degrees
    at_pos = [q[0] for q in chain]
    at_neg = [q[0] * (-1) ** (len(q) - 1) for q in chain]
    return _sign_changes(at_neg) - _sign_changes(at_pos)


def sturm_real_root_count(coeffs) -> int:
    """Real roots counted with multiplicity, in exact rational arithmetic.

    Float coefficients are converted exactly.  Multiplicities come from the
    chain ``g_0 = p``, ``g_{k+1} = gcd(g_k, g_k')``: a root of multiplicity m is
    a distinct root of ``g_0, ..., g_{m-1}``.
    """
    p = [Fraction(x) for x in np.asarray(coeffs, dtype=float).tolist()]
    p = _poly_trim(p)
    total = 0
    while len(p) > 1:
        total += _distinct_real_roots(p)
        p = _poly_gcd(p, _poly_deriv(p))
    return total


def count_real_roots_pK(strat: Stratification, c: float, M: int, K: float) -> int:
    """Number of real roots (with multiplicity) of ``p_K``."""
    return sturm_real_root_count(pK_coefficients(strat, c, M, K))


@dataclass
class SubspacePair:
    stable_frame: np.ndarray
    unstable_frame: np.ndarray
    residual: float


def _invariance_residual(A, F):
    proj = np.linalg.pinv(F) @ A @ F
    return float(np.linalg.norm(A @ F - F @ proj) / max(1.0, np.linalg.norm(A)))


def spectral_projectors(matrix, tol: float = 1e-9) -> SubspacePair:
    """Orthonormal frames of the stable and unstable invariant subspaces.

    Uses ordered complex Schur forms.  Raises ``ValueError`` when an eigenvalue
    lies within ``tol * ||matrix||`` of the imaginary axis.
    """
    A = np.asarray(matrix, dtype=complex)
    thr = tol * max(1.0, np.linalg.norm(A, 2))
    ev = np.linalg.eigvals(A)
    if np.any(np.abs(ev.real) <= thr):
        raise ValueError("eigenvalue on the imaginary axis: no hyperbolic splitting")
    _, Zs, ns = linalg.schur(A, output="complex", sort=lambda z: z.real < 0)
    _, Zu, nu = linalg.schur(A, output="complex", sort=lambda z: z.real > 0)
    Fs, Fu = Zs[:, :ns], Zu[:, :nu]
    res = max(_invariance_residual(A, Fs) if ns else 0.0, _invariance_residual(A, Fu) if nu else 0.0)
    return SubspacePair(Fs, Fu, res)


def _stable_block_vectors(block):
    """Right/left eigenvectors of the eigenvalue with smallest real part."""
    ev, vr = np.linalg.eig(block)
    idx = int(np.argmin(ev.real))
    evl, vl = np.linalg.eig(block.T)
    jdx = int(np.argmin(np.abs(evl - ev[idx])))
    return ev, idx, vr[:, idx], vl[:, jdx]


def asymptotic_frames(strat: Stratification, c: float, kappa: complex, N: int):
    """Frames of the asymptotic stable and unstable subspaces, analytic in ``kappa``.

    In each block the stable eigenvalue is the one of smallest real part (this
    continues the Re-sign splitting from ``Re kappa > 0`` to the imaginary axis
    and the origin).  The frames are spectral projections of fixed real vectors:
    ``P_s e_(M,4)`` and ``P_u e_(M,1..3)``.

    Returns ``(stable_frame, unstable_frame, sum of stable eigenvalues,
    sum of unstable eigenvalues)``.
    """
    d = 4 * N + 4
    Vs = np.zeros((d, N + 1), dtype=complex)
    Vu = np.zeros((d, 3 * N + 3), dtype=complex)
    sig_s = 0.0 + 0.0j
    sig_u = 0.0 + 0.0j
    for M in range(N + 1):
        block = asymptotic_block(strat, c, kappa, M).astype(complex)
        ev, idx, v, w = _stable_block_vectors(block)
        Ps = np.outer(v, w) / (w @ v)
        Pu = np.eye(4) - Ps
        sl = slice(4 * M, 4 * M + 4)
        Vs[sl, M] = Ps[:, 3]
        Vu[sl, 3 * M : 3 * M + 3] = Pu[:, :3]
        sig_s += ev[idx]
        sig_u += ev.sum() - ev[idx]
    return Vs, Vu, complex(sig_s), complex(sig_u)


@dataclass
class SplittingSample:
    kappa: complex
    n_stable: int
    n_unstable: int
    n_neutral: int
    gap: float
    ok: bool


@dataclass
class SplittingReport:
    samples: list = field(default_factory=list)
    declined: list = field(default_factory=list)

    @property
    def min_gap(self) -> float:
        return min((s.gap for s in self.samples), default=float("nan"))

    @property
    def passed(self) -> bool:
        return all(s.ok for s in self.samples) and self.min_gap > 0

    @property
    def failures(self):
        return [s for s in self.samples if not s.ok]


def splitting_certificate(strat: Stratification, c: float, N: int, kappa_samples, tol: float = 1e-9) -> SplittingReport:
    """Check the asymptotic eigenvalue counts and spectral gap at each sample.

    For ``Re kappa > 0`` the counts must be exactly ``(N+1, 3N+3)``.  On the
    imaginary axis the ``N+1`` eigenvalues of smallest real part must be
    separated from the rest.  ``kappa = 0`` is declined.
    """
    report = SplittingReport()
    n_s = N + 1
    for kappa in kappa_samples:
        kappa = complex(kappa)
        if kappa == 0:
            report.declined.append(kappa)
            continue
        ev = np.linalg.eigvals(asymptotic_matrix(strat, c, kappa, N))
        scale = max(1.0, float(np.max(np.abs(ev))))
        thr = tol * scale
        re = np.sort(ev.real)
        gap = float(re[n_s] - re[n_s - 1])
        ns = int(np.sum(ev.real < -thr))
        nu = int(np.sum(ev.real > thr))
        nn = len(ev) - ns - nu
        if kappa.real > thr:
            ok = ns == n_s and nu == 3 * n_s and gap > 0
        else:
            ok = ns >= n_s and gap > 0 and re[n_s - 1] < -thr
        report.samples.append(SplittingSample(kappa, ns, nu, nn, gap, bool(ok)))
    return report


def sobol_kappas(n: int, seed: int = 0, re_max: float = 2.0, im_max: float = 2.0):
    """Scrambled Sobol samples in ``{0 < Re <= re_max, |Im| <= im_max}``."""
    from scipy.stats import qmc

    with warnings.catch_warnings():
        # a prefix of a scrambled Sobol sequence is still well spread for any n
        warnings.filterwarnings("ignore", message=".*balance properties.*")
        pts = qmc.Sobol(d=2, scramble=True, seed=seed).random(n)
    return re_max * (1.0 - pts[:, 0]) + 1j * im_max * (2.0 * pts[:, 1] - 1.0)


def continue_roots(strat: Stratification, c: float, M: int, path, max_halvings: int = 30):
    """Track the four roots of the quartic along a path by nearest matching.

    Steps are halved until every root moves less than a third of the minimal
    root separation.  Returns an array ``[len(path), 4]``.
    """
    path = [complex(k) for k in path]
    current = np.sort_complex(np.roots(char_poly(strat, c, path[0], M)))
    out = [current]
    for k0, k1 in zip(path, path[1:]):
        pending = [k1]
        start = k0
        halvings = 0
        while pending:
            target = pending[-1]
            nxt = np.roots(char_poly(strat, c, target, M))
            sep = min(abs(a - b) for i, a in enumerate(current) for b in current[i + 1 :])
            order = [int(np.argmin(np.abs(nxt - z))) for z in current]
            moved = np.abs(nxt[order] - current)
            if len(set(order)) == 4 and np.all(moved < sep / 3):
                current = nxt[order]
                start = target
                pending.pop()
            else:
                halvings += 1
                if halvings > max_halvings:
                    raise RuntimeError("root continuation failed to resolve a near collision")
                pending.append(0.5 * (start + target))
        out.append(current)
    return np.array(out)
