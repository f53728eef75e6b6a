import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isw_evans.evans import (
    ContourTooCloseError,
    EvansConfig,
    EvansEngine,
    additive_compound,
    boundary_frames,
    circle,
    compound_minors,
    evans_derivative,
    evans_value,
    finite_difference_derivative,
    half_annulus,
    multiplicative_compound,
    pair_wedges,
    translational_speed_modes,
    wedge,
    winding_number,
)
from isw_evans.profile import WaveProfile
from isw_evans.spectrum import spectral_projectors
from isw_evans.stratification import Stratification
from isw_evans.truncation import TruncatedOperator

STRAT = Stratification(1.0)


@pytest.fixture(scope="module")
def wave():
    return WaveProfile(STRAT, 0.05)


@pytest.fixture(scope="module")
def engine0(wave):
    return EvansEngine(TruncatedOperator(wave, 0))


@pytest.fixture(scope="module")
def engine1(wave):
    return EvansEngine(TruncatedOperator(wave, 1))


@pytest.fixture(scope="module")
def quiescent():
    return TruncatedOperator(WaveProfile(STRAT, 0.0), 1, speed=1.1 * STRAT.c0)


def _in_span(basis, V, tol=1e-9):
    coef, *_ = np.linalg.lstsq(basis, V, rcond=None)
    return np.max(np.abs(basis @ coef - V)) <= tol


def test_quiescent_frames_are_asymptotic_eigenspaces(quiescent):
    kappa = 0.5 + 0.2j
    Qs, Qu, _, _ = boundary_frames(quiescent, kappa, EvansConfig(L=30.0))
    pair = spectral_projectors(quiescent.asymptotic(kappa))
    assert _in_span(pair.stable_frame, Qs)
    assert _in_span(pair.unstable_frame, Qu)


def test_quiescent_evans_nonzero(quiescent):
    eng = EvansEngine(quiescent, EvansConfig(L=30.0))
    assert abs(eng.value(0.5)) > 1e-3
    assert eng.value(eng.kappa_ref) == pytest.approx(1.0)


def test_quiescent_no_zeros_in_right_half_plane(quiescent):
    eng = EvansEngine(quiescent, EvansConfig(L=30.0))
    res = winding_number(eng.value, half_annulus(0.1, 3.0, 1e-3, n_arc=24, n_line=8))
    assert res.winding == 0


@pytest.mark.parametrize("kappa", [0.3 + 0.2j, 0.05 - 0.4j, 1.5j])
def test_conjugate_symmetry(engine1, kappa):
    a, b = engine1.value(kappa), engine1.value(np.conj(kappa))
    assert abs(a - np.conj(b)) <= 1e-10 * max(1.0, abs(a))


def test_real_kappa_gives_real_value(engine0):
    v = engine0.value(0.2)
    assert abs(v.imag) <= 1e-10 * abs(v)


def test_domain_length_independence(wave):
    op = TruncatedOperator(wave, 1)
    L = op.default_length()
    a = EvansEngine(op, EvansConfig(L=L))
    b = EvansEngine(op, EvansConfig(L=1.5 * L))
    for kappa in (0.3 + 0.2j, 0.01 + 0.05j):
        va, vb = a.value(kappa), b.value(kappa)
        assert abs(va - vb) <= 1e-6 * abs(va)


def test_exterior_matches_orthogonal(wave):
    op = TruncatedOperator(wave, 1)
    ortho = EvansEngine(op)
    ext = EvansEngine(op, EvansConfig(method="exterior"))
    for kappa in (0.3 + 0.2j, 0.02 - 0.01j, 0.8j):
        a, b = ortho.value(kappa), ext.value(kappa)
        assert abs(a - b) <= 1e-8 * max(1.0, abs(a))


def test_adaptive_matches_magnus(engine0):
    ad = EvansEngine(engine0.op, EvansConfig(integrator="adaptive", rtol=1e-10, atol=1e-12))
    kappa = 0.3 + 0.2j
    assert abs(ad.value(kappa) - engine0.value(kappa)) <= 1e-6


def test_normalized_value_independent_of_initial_frame_basis(wave):
    op = TruncatedOperator(wave, 1)
    plain = EvansEngine(op)
    rescaled = EvansEngine(op)
    rng = np.random.default_rng(7)
    Ts = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) + 2 * np.eye(2)
    Tu = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)) + 4 * np.eye(6)
    base = rescaled.frames_at_infinity

    def mixed(kappa):
        Vs, Vu, ss, su = base(kappa)
        return Vs @ Ts, Vu @ Tu, ss, su

    rescaled.frames_at_infinity = mixed
    for kappa in (0.3 + 0.2j, 0.05j):
        a, b = plain.value(kappa), rescaled.value(kappa)
        assert abs(a - b) <= 1e-9 * max(1.0, abs(a))


def test_winding_invariant_under_nonvanishing_factor(quiescent):
    eng = EvansEngine(quiescent, EvansConfig(L=30.0))
    contour = circle(0.6, 0.4, n=24)
    a = winding_number(eng.value, contour).winding
    b = winding_number(lambda k: eng.value(k) * np.exp(0.7 * k + 0.3j) * (k + 5.0), contour).winding
    assert a == b == 0


def test_error_estimate_small_and_shrinks_with_step(wave):
    op = TruncatedOperator(wave, 0)
    kappa = 0.3 + 0.2j
    coarse = EvansEngine(op, EvansConfig(step=0.5)).error_estimate(kappa)
    fine = EvansEngine(op, EvansConfig(step=0.25)).error_estimate(kappa)
    assert fine < 1e-6
    assert fine < coarse / 8


def test_splitting_failure_raises(wave):
    # a complex pair straddles the stable/unstable cut here, so no gap
    with pytest.raises(ValueError):
        evans_value(TruncatedOperator(wave, 1), -0.7)


def test_finite_difference_on_polynomials():
    f = lambda z: z**3 - 2 * z + 1
    d1, e1 = finite_difference_derivative(f, 0.7, 1, 0.1)
    d2, e2 = finite_difference_derivative(f, 0.7, 2, 0.1)
    assert d1 == pytest.approx(3 * 0.49 - 2, abs=1e-12)
    assert d2 == pytest.approx(6 * 0.7, abs=1e-10)
    with pytest.raises(ValueError):
        finite_difference_derivative(f, 0.0, 3, 0.1)


def test_evans_derivative_matches_analytic_fit(engine0):
    d, err = evans_derivative(engine0, 0.3, 1, h=0.01)
    h = 1e-4
    ref = (engine0.value(0.3 + h) - engine0.value(0.3 - h)) / (2 * h)
    assert abs(d - ref) <= 1e-5 * max(1.0, abs(ref))
    assert err < 1e-3


@settings(max_examples=20)
@given(seed=st.integers(0, 10_000), k=st.integers(1, 3))
def test_multiplicative_compound_is_multiplicative(seed, k):
    rng = np.random.default_rng(seed)
    P, Q = rng.normal(size=(2, 4, 4))
    lhs = multiplicative_compound(P @ Q, k)
    rhs = multiplicative_compound(P, k) @ multiplicative_compound(Q, k)
    assert np.allclose(lhs, rhs, atol=1e-9)


@pytest.mark.parametrize("n, k", [(4, 3), (8, 6), (12, 9)])
def test_complementary_minor_identity_matches_direct_minors(n, k):
    rng = np.random.default_rng(n + k)
    P = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    ref = compound_minors(P, k)
    assert np.max(np.abs(multiplicative_compound(P, k) - ref)) <= 1e-12 * np.max(np.abs(ref))


def test_additive_compound_generates_multiplicative():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(5, 5))
    from scipy.linalg import expm

    for k in (1, 2, 3):
        t = 1e-6
        fd = (multiplicative_compound(expm(t * A), k) - multiplicative_compound(expm(-t * A), k)) / (2 * t)
        assert np.allclose(fd, additive_compound(A, k), atol=1e-6)


def test_wedge_pairing_is_determinant():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    val = pair_wedges(wedge(X[:, :2]), wedge(X[:, 2:]), 6, 2)
    assert val == pytest.approx(np.linalg.det(X), rel=1e-12)


def test_winding_number_of_polynomials():
    f = lambda z: (z - 0.1) * (z + 0.2j)
    assert winding_number(f, circle(0.0, 1.0, n=8)).winding == 2
    assert winding_number(f, circle(3.0, 1.0, n=8)).winding == 0
    with pytest.raises(ContourTooCloseError):
        winding_number(f, circle(0.0, 1.0, n=8), floor=10.0)


def test_half_annulus_geometry():
    c = half_annulus(1.0, 5.0, 1e-4, n_arc=16, n_line=4)
    assert np.all(c.points.real >= 1e-4 - 1e-12)
    mod = np.abs(c.points)
    assert np.all(mod >= 1.0 - 1e-12) and np.all(mod <= 5.0 + 1e-12)
    with pytest.raises(ValueError):
        half_annulus(2.0, 1.0)


def test_mode_residuals_quiescent_degenerate(quiescent):
    rep = translational_speed_modes(quiescent.profile, quiescent)
    assert rep.degenerate


def test_speed_mode_residual_shrinks_like_profile_error():
    # the leading-order profile solves the full problem only up to O(epsilon^3)
    res = []
    for eps in (0.05, 0.025):
        prof = WaveProfile(STRAT, eps)
        res.append(translational_speed_modes(prof, TruncatedOperator(prof, 0)).v2_relative)
    assert np.log2(res[0] / res[1]) >= 2.5


@pytest.fixture(scope="module")
def unit_scale(engine1):
    # D is only defined on the closed right half-plane, so the scale is taken there
    t = np.linspace(-np.pi / 2, np.pi / 2, 9)
    return max(abs(engine1.value(np.exp(1j * s))) for s in t)


def test_double_zero_value_at_origin(engine1, unit_scale):
    assert abs(engine1.value(0.0)) <= 1e-6 * unit_scale


def test_first_derivative_at_origin_within_error(engine1):
    d, err = evans_derivative(engine1, 0.0, 1)
    assert abs(d) <= max(err, 1e-12)


def test_second_derivative_at_origin_stable(engine1):
    h = 0.2 * engine1.op.profile.epsilon**3
    a, _ = evans_derivative(engine1, 0.0, 2, h=h)
    b, _ = evans_derivative(engine1, 0.0, 2, h=h / 2)
    assert abs(a) > 0
    assert abs(a - b) <= 0.05 * abs(b)


def test_small_origin_circle_encloses_double_zero(engine1):
    r0 = engine1.op.profile.epsilon**3
    res = winding_number(engine1.value, circle(0.0, r0, n=16), floor=10 * engine1.error_estimate(r0))
    assert res.winding == 2


def test_frame_span_independent_of_length(wave):
    op = TruncatedOperator(wave, 1)
    L = op.default_length()
    kappa = 0.2 + 0.1j
    from scipy.linalg import subspace_angles

    a = boundary_frames(op, kappa, EvansConfig(L=L))
    b = boundary_frames(op, kappa, EvansConfig(L=1.5 * L))
    for i in (0, 1):
        assert np.max(subspace_angles(a[i], b[i])) <= 1e-8


def test_translational_mode_residual(wave):
    rep = translational_speed_modes(wave, TruncatedOperator(wave, 1))
    assert rep.v1_relative <= 1e-6


def test_speed_mode_residual(wave):
    rep = translational_speed_modes(wave, TruncatedOperator(wave, 1))
    assert rep.v2_relative <= 1e-5
