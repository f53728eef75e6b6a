import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isw_evans.profile import WaveProfile, kdv_soliton
from isw_evans.stratification import Stratification, mode_eigenvalue
from isw_evans.truncation import (
    OperatorFieldSet,
    TruncatedOperator,
    apply_RS,
    assemble_A,
    asymptotic_block,
    asymptotic_matrix,
    coordinate_index,
    galerkin_entry,
)

STRAT = Stratification(1.0)


@pytest.fixture(scope="module")
def op1():
    return TruncatedOperator(WaveProfile(STRAT, 0.05), 1)


@pytest.fixture(scope="module")
def quiescent_op():
    return TruncatedOperator(WaveProfile(STRAT, 0.0), 2, speed=1.1 * STRAT.c0)


def test_block_rows_at_zero_kappa():
    c = 1.1 * STRAT.c0
    lam = STRAT.lam(c)
    for M in range(3):
        A = asymptotic_block(STRAT, c, 0.0, M)
        assert np.allclose(A[0], [0, 0, -1 / c, 0])
        assert np.allclose(A[1], [0, 0, 1, 0])
        assert np.allclose(A[2], [0, 0, 0, 1])
        assert np.allclose(A[3], [0, 0, STRAT.delta * (mode_eigenvalue(STRAT, M) - lam), 0])


@given(re=st.floats(-3, 3), im=st.floats(-3, 3), M=st.integers(0, 5))
def test_block_general_rows_and_trace(re, im, M):
    c = 1.1 * STRAT.c0
    k = complex(re, im)
    d, lam, lm = STRAT.delta, STRAT.lam(c), mode_eigenvalue(STRAT, M)
    A = asymptotic_block(STRAT, c, k, M)
    expected = np.array(
        [[k / c, 0, -1 / c, 0], [0, 0, 1, 0], [0, 0, 0, 1], [d * lam * k, -k * lm * d / c, d * (lm - lam), k / c]]
    )
    assert np.allclose(A, expected, rtol=1e-14, atol=1e-14)
    assert np.trace(A) == pytest.approx(2 * k / c)


def test_asymptotic_matrix_is_block_diagonal():
    c = 1.2 * STRAT.c0
    A = asymptotic_matrix(STRAT, c, 0.4 + 0.1j, 3)
    for M in range(4):
        for L in range(4):
            blk = A[4 * M : 4 * M + 4, 4 * L : 4 * L + 4]
            if M == L:
                assert np.array_equal(blk, asymptotic_block(STRAT, c, 0.4 + 0.1j, M))
            else:
                assert not blk.any()


def test_subcritical_speed_rejected():
    with pytest.raises(ValueError):
        asymptotic_block(STRAT, STRAT.c0, 0.1, 0)
    with pytest.raises(ValueError):
        asymptotic_block(STRAT, 0.9 * STRAT.c0, 0.1, 0)


def test_quiescent_projection_reproduces_derived_blocks(quiescent_op):
    P0, P1 = quiescent_op.quiescent_projection_parts()
    A0, A1 = quiescent_op.asymptotic_parts()
    assert np.max(np.abs(P0 - A0)) < 1e-10
    assert np.max(np.abs(P1 - A1)) < 1e-10


def test_flipped_sign_variant_regression(quiescent_op):
    # the flipped sign disagrees with the operator projection and puts four roots on the imaginary axis
    c = quiescent_op.c
    flipped = TruncatedOperator(quiescent_op.profile, 2, speed=c, variant="flipped")
    P0, _ = quiescent_op.quiescent_projection_parts()
    B0, _ = flipped.asymptotic_parts()
    r = coordinate_index(1, 4)
    col = coordinate_index(1, 3)
    assert P0[r, col] == pytest.approx(STRAT.delta * (mode_eigenvalue(STRAT, 1) - STRAT.lam(c)))
    assert B0[r, col] == pytest.approx(-P0[r, col])
    # on the imaginary axis exactly two roots must be neutral
    for K in (0.1, 1.0):
        for variant, expected in (("derived", 2), ("flipped", 4)):
            mu = np.linalg.eigvals(asymptotic_block(STRAT, c, 1j * K, 1, variant=variant))
            assert int(np.sum(np.abs(mu.real) < 1e-9)) == expected


def test_quiescent_profile_gives_asymptotic_matrix(quiescent_op):
    for xi in (0.0, 5.0, -120.0):
        for k in (0.0, 0.3 - 0.2j):
            assert np.array_equal(assemble_A(quiescent_op, xi, k), quiescent_op.asymptotic(k))
    assert galerkin_entry(quiescent_op, 0.0, 0.5, 1, 4, 2, 1) == 0


def test_quiescent_action_on_slot_four():
    # A_inf U_M^4 = U_M^3 + (kappa/c) U_M^4
    op = TruncatedOperator(WaveProfile(STRAT, 0.0), 1, speed=1.1 * STRAT.c0)
    kappa = 0.7 - 0.4j
    A = op.asymptotic(kappa)
    for M in range(2):
        col = A[:, coordinate_index(M, 4)]
        expected = np.zeros(op.dim, complex)
        expected[coordinate_index(M, 3)] = 1.0
        expected[coordinate_index(M, 4)] = kappa / op.c
        assert np.allclose(col, expected)


@settings(max_examples=25, deadline=None)
@given(
    xi=st.floats(-100, 100),
    k1=st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
    k2=st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
)
def test_kappa_affinity(op1, xi, k1, k2):
    A1, A2, Am = (assemble_A(op1, xi, k) for k in (k1, k2, 0.5 * (k1 + k2)))
    assert np.max(np.abs(A1 + A2 - 2 * Am)) <= 1e-12 * max(1.0, np.max(np.abs(A1)))


def test_far_field_entries_vanish(op1):
    eps = op1.profile.epsilon
    for xi in (40 / eps, -40 / eps, 60 / eps):
        for (M, l, L, k) in [(0, 4, 0, 1), (0, 4, 0, 3), (1, 1, 0, 2), (1, 4, 1, 4)]:
            assert abs(galerkin_entry(op1, xi, 0.5 + 0.5j, M, l, L, k)) <= 1e-10


def test_rows_two_and_three_unperturbed(op1):
    B0, B1 = op1.perturbation_parts(np.array([0.0, 3.0]))
    for M in range(2):
        for k in (2, 3):
            r = coordinate_index(M, k)
            assert not B0[:, r].any() and not B1[:, r].any()


def _leading_order_deviations(eps):
    prof = WaveProfile(STRAT, eps)
    op = TruncatedOperator(prof, 1)
    co = prof.coeffs
    r, s, c0 = co.r, co.s, co.c0
    xi = 1.0 / eps
    Ad = kdv_soliton(co, eps * xi, 1)
    A = kdv_soliton(co, eps * xi)
    B0, _ = op.perturbation_parts(xi)
    i = coordinate_index(0, 4)
    g = (
        B0[i, coordinate_index(0, 1)] / (eps**3 * Ad),
        B0[i, coordinate_index(0, 2)] / (eps**3 * Ad),
        B0[i, coordinate_index(0, 3)] / (eps**2 * A),
    )
    ref = (2 * c0 * r / (3 * s), -4 * r / (3 * s), -2 * r / s)
    return np.array([abs(a / b - 1) for a, b in zip(g, ref)])


def test_leading_order_constants():
    dev_coarse = _leading_order_deviations(0.05)
    dev_fine = _leading_order_deviations(0.025)
    assert np.all(dev_coarse <= 0.05) and np.all(dev_fine <= 0.025)
    # at least first-order convergence
    assert np.all(dev_fine <= 0.6 * dev_coarse)


def test_a43_entry_leading_order():
    errors = []
    for eps in (0.05, 0.025, 0.0125):
        prof = WaveProfile(STRAT, eps)
        co = prof.coeffs
        A0, _ = TruncatedOperator(prof, 0).split(0.0)
        a43 = eps**2 * (-1 / co.s - (2 * co.r / co.s) * kdv_soliton(co, 0.0))
        errors.append(abs(A0[3, 2] - a43))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 3.5)
    assert errors[0] <= 400 * 0.05**4


def test_block_diagonal_limit_decays_at_profile_rate(op1):
    xi = np.linspace(100, 400, 7)
    A_inf = op1.asymptotic(0.3)
    dev = np.array([np.max(np.abs(assemble_A(op1, x, 0.3) - A_inf)) for x in xi])
    rate = -np.polyfit(xi, np.log(dev), 1)[0]
    assert rate == pytest.approx(op1.decay_rate, rel=0.2)


def test_quadrature_convergence():
    prof = WaveProfile(STRAT, 0.05)
    a = TruncatedOperator(prof, 1, nodes=128).split(np.array([0.0, 7.0]))
    b = TruncatedOperator(prof, 1, nodes=256).split(np.array([0.0, 7.0]))
    for x, y in zip(a, b):
        assert np.max(np.abs(x - y)) < 1e-10


def test_entries_invariant_under_node_reordering(op1):
    y = op1.grid.nodes
    fields = op1.fields(np.array([2.0]))
    perm = np.random.default_rng(1).permutation(len(y))
    shuffled = OperatorFieldSet({k: np.asarray(v)[..., perm] for k, v in fields.coef.items()})
    for k in (1, 2, 3, 4):
        r, s = apply_RS(fields, 0.3, k, 1, STRAT, y)
        rp, sp_ = apply_RS(shuffled, 0.3, k, 1, STRAT, y[perm])
        assert np.allclose(r[..., perm], rp, rtol=1e-14, atol=0)
        assert np.allclose(s[..., perm], sp_, rtol=1e-14, atol=0)
        w = op1.grid.weights
        assert np.sum(r * w) == pytest.approx(np.sum(rp * w[perm]), rel=1e-12, abs=1e-15)


def test_apply_rs_is_affine_in_kappa(op1):
    y = op1.grid.nodes
    fields = op1.fields(np.array([1.5]))
    for k in (1, 2, 3, 4):
        r0, s0 = apply_RS(fields, 0.0, k, 0, STRAT, y)
        r1, s1 = apply_RS(fields, 1.0, k, 0, STRAT, y)
        r2, s2 = apply_RS(fields, 2.0, k, 0, STRAT, y)
        assert np.allclose(r2 - 2 * r1 + r0, 0, atol=1e-10)
        assert np.allclose(s2 - 2 * s1 + s0, 0, atol=1e-10)


def test_vanishing_denominator_is_rejected():
    prof = WaveProfile(STRAT, 0.05)
    pf = prof.fields(np.array([[0.0]]), np.array([[0.5]]))
    bad = type(pf)(c=-abs(pf.c), psi=pf.psi, rho=pf.rho)
    with pytest.raises(ZeroDivisionError):
        OperatorFieldSet.from_profile_fields(bad, STRAT.g)


def test_spline_cache_matches_fresh_assembly():
    prof = WaveProfile(STRAT, 0.05)
    fresh = TruncatedOperator(prof, 1)
    cached = TruncatedOperator(prof, 1, cache=True)
    xi = np.array([0.3, 11.1, -47.0])
    for a, b in zip(fresh.split(xi), cached.split(xi)):
        assert np.max(np.abs(a - b)) <= 1e-6 * np.max(np.abs(a))


def test_index_errors(op1):
    with pytest.raises(IndexError):
        galerkin_entry(op1, 0.0, 0.0, 2, 1, 0, 1)
    with pytest.raises(IndexError):
        galerkin_entry(op1, 0.0, 0.0, 0, 5, 0, 1)
    assert op1.dim == 8
