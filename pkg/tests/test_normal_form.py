from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import FROZEN
from grazslide.errors import SingularCycleError
from grazslide.linalg import char_coeffs, cubic_roots, eigenvalues3, matrix_exponential
from grazslide.normal_form import (NormalFormParams, build_map, classify_moduli, classify_stability,
                                   companion, iterate_word, side, solve_cycle, word_matrices)

finite = st.floats(-3.0, 3.0, allow_nan=False)
params = st.builds(NormalFormParams, finite, finite, finite, finite, finite, finite, st.floats(0.1, 2.0))


def test_rlr_cycle_point(family_nf):
    c = solve_cycle(build_map(family_nf), "RLR")
    want = [float(Fraction(*v)) for v in FROZEN["family_RLR_x0"]]
    assert np.allclose(c.points[0], want, atol=1e-14)
    assert c.admissible
    assert c.residual < 1e-12


def test_rlr_cycle_is_saddle(family_nf):
    c = solve_cycle(build_map(family_nf), "RLR")
    assert classify_stability(c) == "saddle"
    assert np.allclose(sorted(c.moduli, reverse=True), FROZEN["family_M_X_eigs"], atol=1e-10)


def test_fixed_point_of_right_branch(family_nf):
    # with delta_R = 0 the R-cycle is the fixed point of f_R
    m = build_map(family_nf)
    c = solve_cycle(m, "R")
    assert np.allclose(m.branch("R", c.points[0]), c.points[0], atol=1e-14)


def test_zero_mu_gives_origin(family_nf):
    c = solve_cycle(build_map(family_nf.replace(mu=0.0)), "RLRLR")
    assert np.all(c.points == 0.0)


def test_x2y_cycle_stable(family_nf):
    c = solve_cycle(build_map(family_nf), "RLRRLRLR")
    assert c.admissible and c.stability == "stable"


def test_singular_cycle_error():
    p = NormalFormParams(1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0)  # eigenvalue 1 in both branches
    with pytest.raises(SingularCycleError) as err:
        solve_cycle(build_map(p), "L")
    assert err.value.det == pytest.approx(0.0, abs=1e-12)


def test_classify_moduli():
    assert classify_moduli([0.0, 0.0, 0.0]) == "stable"
    assert classify_moduli([2.0, 0.5, 0.0]) == "saddle"
    assert classify_moduli([2.0, 1.5, 1.1]) == "unstable"


def test_side_tolerance():
    assert side([1e-12, 1.0, 0.0]) == "S"
    assert side([-1e-3, 0.0, 0.0]) == "L"
    assert side([1e-3, 0.0, 0.0]) == "R"


def test_char_coeffs_identity():
    assert char_coeffs(np.eye(3)) == (3.0, 3.0, 1.0)


def test_second_trace_of_m_x(family_nf):
    M, _ = word_matrices(build_map(family_nf), "RLR")
    assert char_coeffs(M)[1] == pytest.approx(1.0, abs=1e-13)


@given(finite, finite, finite)
def test_char_coeffs_of_companion(tau, sigma, delta):
    t, s, d = char_coeffs(companion(tau, sigma, delta))
    assert (t, s, d) == pytest.approx((tau, sigma, delta), abs=1e-14)


@given(arrays(float, (3, 3), elements=finite))
def test_char_coeffs_symmetric_functions(Q):
    lam = np.linalg.eigvals(Q)
    t, s, d = char_coeffs(Q)
    scale = 1.0 + np.max(np.abs(lam)) ** 3
    assert abs(t - lam.sum().real) < 1e-10 * scale
    assert abs(s - (lam[0] * lam[1] + lam[0] * lam[2] + lam[1] * lam[2]).real) < 1e-10 * scale
    assert abs(d - np.prod(lam).real) < 1e-10 * scale


@given(arrays(float, (3, 3), elements=finite))
def test_cubic_roots_match_eig(Q):
    ours = np.sort_complex(eigenvalues3(Q))
    ref = np.sort_complex(np.linalg.eigvals(Q))
    scale = 1.0 + np.max(np.abs(ref))
    # multiple roots are only determined to about the cube root of rounding
    assert np.max(np.abs(ours - ref)) < 1e-5 * scale


def test_cubic_roots_triple_root():
    r = cubic_roots(3.0, 3.0, 1.0)
    assert np.allclose(r, 1.0, atol=1e-5)
    assert np.all(np.abs(np.imag(r)) < 1e-5)


@settings(max_examples=50)
@given(params, st.lists(st.sampled_from("LR"), min_size=1, max_size=8).map("".join),
       arrays(float, 3, elements=finite))
def test_composition_matches_forced_iteration(p, w, x):
    m = build_map(p)
    M, P = word_matrices(m, w)
    direct = iterate_word(m, w, x)[-1]
    scale = 1.0 + np.max(np.abs(direct))
    assert np.max(np.abs(M @ x + P @ m.b * m.mu - direct)) < 1e-12 * scale


@settings(max_examples=50)
@given(params, st.lists(st.sampled_from("LR"), min_size=1, max_size=6).map("".join),
       st.sampled_from("LR"))
def test_composition_recursion(p, w, s):
    m = build_map(p)
    M, P = word_matrices(m, w)
    M2, P2 = word_matrices(m, w + s)
    A = m.matrix(s)
    assert np.allclose(M2, A @ M, rtol=1e-12, atol=1e-12 * (1 + np.abs(M2).max()))
    assert np.allclose(P2, A @ P + np.eye(3), rtol=1e-12, atol=1e-12 * (1 + np.abs(P2).max()))


def test_continuity_across_switching_plane():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        p = NormalFormParams(*rng.uniform(-3, 3, 6), rng.uniform(0.1, 2))
        m = build_map(p)
        x = np.concatenate([[0.0], rng.uniform(-5, 5, 2)])
        assert np.max(np.abs(m.branch("L", x) - m.branch("R", x))) <= 1e-13


def test_right_branch_kills_third_component(family_nf):
    rng = np.random.default_rng(3)
    m = build_map(family_nf)
    M, _ = word_matrices(m, "LRLR")
    for x in rng.normal(size=(100, 3)):
        assert (m.A_R @ x)[2] == 0.0
        assert abs((M @ x)[2]) < 1e-15


# matrix exponential

def test_expm_zero():
    assert np.array_equal(matrix_exponential(np.zeros((3, 3))), np.eye(3))


def test_expm_nilpotent():
    N = np.diag([1.0, 1.0], 1)
    t = 1.7
    assert np.allclose(matrix_exponential(N, t), np.eye(3) + t * N + t * t * N @ N / 2, atol=1e-15)


def test_expm_against_high_precision(ode):
    from grazslide.ode_model import system_matrix
    E = matrix_exponential(system_matrix(ode), 2 * np.pi)
    assert np.allclose(E, FROZEN["family_fit"]["expm_2piA"], atol=1e-13)


@settings(max_examples=50)
@given(arrays(float, (3, 3), elements=st.floats(-2, 2)), st.floats(0, 3), st.floats(0, 3))
def test_expm_semigroup(A, t, s):
    A = A - (np.max(np.abs(np.linalg.eigvals(A))) + 0.1) * np.eye(3)  # stable
    lhs = matrix_exponential(A, t) @ matrix_exponential(A, s)
    rhs = matrix_exponential(A, t + s)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (1.0 + np.max(np.abs(rhs)))


@settings(max_examples=50)
@given(arrays(float, (3, 3), elements=st.floats(-4, 4)))
def test_expm_against_scipy(A):
    ref = scipy.linalg.expm(A)
    assert np.max(np.abs(matrix_exponential(A) - ref)) <= 1e-12 * (1.0 + np.max(np.abs(ref)))
