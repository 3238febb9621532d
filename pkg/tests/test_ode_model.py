import numpy as np
import pytest

from conftest import FROZEN
from grazslide.errors import DomainError, EscapeError, SlidingError
from grazslide.linalg import matrix_exponential
from grazslide.ode_model import (LeftFlow, OdeParams, PoincareState, affine_discontinuity_map,
                                 excursion, from_section, grazing_data, leading_order_normal_form,
                                 left_flow, particular_solution, sliding_field_3d, sliding_rhs,
                                 system_matrix, to_section, trajectory)

TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def at_graz(ode, gamma_graz):
    return ode.with_gamma(gamma_graz)


def test_grazing_values(ode):
    gd = grazing_data(ode)
    assert gd.gamma_graz == pytest.approx(0.9120, abs=5e-4)
    assert gd.gamma_graz == pytest.approx(FROZEN["family_fit"]["gamma_graz"], abs=1e-12)
    assert gd.t_graz == pytest.approx(FROZEN["family_fit"]["t_graz"], abs=1e-12)


def test_grazing_unit_case():
    gd = grazing_data(OdeParams(0.3, 2.0, 0.3, 0.0, 0.0))
    assert gd.gamma_graz == pytest.approx(1.0, abs=1e-15)
    assert gd.t_graz == pytest.approx(np.pi / 2, abs=1e-15)


def test_grazing_quadrant():
    assert np.pi < grazing_data(OdeParams(0.3, 0.5, 0.1, 0.0, 0.0)).t_graz < TWO_PI
    assert 0 < grazing_data(OdeParams(0.3, 1.5, 0.1, 0.0, 0.0)).t_graz < np.pi


def test_degenerate_forcing():
    with pytest.raises(DomainError):
        OdeParams(0.2, 1.0, 0.2, 0.0, 0.0)


def test_particular_solution_grazes(at_graz):
    gd = grazing_data(at_graz)
    xg = particular_solution(at_graz, gd.t_graz)
    assert np.allclose(xg, [0.0, 0.0, -1.0], atol=1e-14)
    ts = np.linspace(0, TWO_PI, 10000, endpoint=False)
    X = particular_solution(at_graz, ts)[:, 0]
    assert X.max() <= 1e-12
    near = np.abs(np.mod(ts - gd.t_graz + np.pi, TWO_PI) - np.pi) < 1e-3
    assert np.all(X[~near] < -1e-8)


def test_particular_solution_invariant(ode):
    p = ode.with_gamma(0.95)
    x0 = particular_solution(p, 0.4)
    assert np.allclose(left_flow(p, x0, 0.4, 7.3), particular_solution(p, 7.3), atol=1e-13)


def test_flow_semigroup(ode):
    rng = np.random.default_rng(2)
    p = ode.with_gamma(0.93)
    for _ in range(200):
        x0 = rng.uniform(-2, 2, 3)
        t0, t1, t2 = np.sort(rng.uniform(0, 20, 3))
        a = left_flow(p, left_flow(p, x0, t0, t1), t1, t2)
        b = left_flow(p, x0, t0, t2)
        assert np.max(np.abs(a - b)) <= 1e-11 * (1 + np.max(np.abs(b)))


def test_eigen_flow_matches_pade(ode):
    p = ode.with_gamma(0.93)
    flow = LeftFlow(p)
    h = np.array([0.3, -0.2, 0.5])
    for t in (0.1, 3.0, 17.0):
        want = particular_solution(p, t) + matrix_exponential(system_matrix(p), t) @ h
        assert np.allclose(flow.state(h, 0.0, t), want, atol=1e-13)


def test_sliding_rhs_equilibrium(ode):
    p = ode.with_gamma(0.95)
    t = np.arccos(p.alpha1 / p.gamma)
    assert sliding_rhs(p, 0.0, 0.0, t) == pytest.approx((0.0, 0.0), abs=1e-15)


def test_sliding_rhs_at_grazing(at_graz):
    dy, _ = sliding_rhs(at_graz, 0.0, -1.0, grazing_data(at_graz).t_graz)
    assert dy == pytest.approx(-1.0, abs=1e-15)


def test_sliding_singularity(ode):
    with pytest.raises(SlidingError):
        sliding_rhs(ode.with_gamma(0.95), -1.0, 0.0, 0.0)


def test_sliding_field_tangency(ode):
    rng = np.random.default_rng(4)
    p = ode.with_gamma(0.95)
    for y, z, t in zip(rng.uniform(0.0, 1.0, 1000), rng.uniform(-2, 0, 1000), rng.uniform(0, TWO_PI, 1000)):
        f = sliding_field_3d(p, y, z, t)
        assert abs(f[0]) <= 1e-14
        assert f[1:] == pytest.approx(sliding_rhs(p, y, z, t), rel=1e-12, abs=1e-14)


def test_gamma_unset(ode):
    with pytest.raises(DomainError):
        particular_solution(ode, 0.0)


def test_leading_order_values(ode, gamma_graz):
    lo = leading_order_normal_form(ode.with_gamma(gamma_graz))
    assert lo.det_O_L == pytest.approx(-5.4366, abs=1e-3)
    assert lo.rho_b == pytest.approx(1.7351, abs=1e-3)
    assert lo.conjugate_to_normal_form


def test_leading_order_spectrum(ode):
    lo = leading_order_normal_form(ode)
    nu = np.linalg.eigvals(system_matrix(ode))
    got = np.sort_complex(np.linalg.eigvals(lo.A_L))
    assert np.allclose(got, np.sort_complex(np.exp(TWO_PI * nu)), atol=1e-10)


def test_rank_deficient_right_matrix():
    p = OdeParams(0.03, 0.17, 0.4, -1.0, 0.0)
    lo = leading_order_normal_form(p)
    assert abs(np.linalg.det(lo.A_R)) < 1e-15
    assert np.allclose(lo.A_R, lo.A_L @ np.diag([0.0, 1.0, 1.0]), atol=1e-15)


def test_section_coordinates_round_trip(ode):
    x = np.array([-0.01, 0.2, 0.03])
    assert np.allclose(from_section(ode, to_section(ode, x, periods=3)), x, atol=1e-12)


def test_discontinuity_map_identity_on_left(ode):
    s = PoincareState(-0.1, 1.0, -0.9)
    assert affine_discontinuity_map(ode, s) is s
    s0 = PoincareState(0.0, 1.0, -0.9)
    assert affine_discontinuity_map(ode, s0) is s0


def test_event_accuracy(ode, gamma_graz):
    p = ode.with_gamma(gamma_graz + 1e-3)
    gd = grazing_data(p)
    s = PoincareState(0.0, gd.t_graz, -1.0)
    for _ in range(5):
        ex = excursion(p, s)
        t_hit, y_hit, z_hit = ex.loops[-1].hit
        x_hit = left_flow(p, [s.X, 0.0, s.Z], s.t, t_hit)
        assert abs(x_hit[0]) <= 1e-11
        assert y_hit > 0
        assert ex.end.X == 0.0
        for lp in ex.loops[:-1]:
            assert lp.symbol == "L" and lp.point.X <= 0.0
        assert ex.loops[-1].symbol == "R"
        s = ex.end


def test_no_sliding_below_grazing(ode, gamma_graz):
    # near the forced periodic orbit, which stays strictly inside X < 0
    p = ode.with_gamma(gamma_graz - 0.01)
    t = grazing_data(p).t_graz
    xp = particular_solution(p, t)
    assert xp[0] < 0.0 and abs(xp[1]) < 1e-15
    with pytest.raises(EscapeError):
        excursion(p, PoincareState(xp[0] + 1e-4, t, xp[2] - 1e-4))


def test_unusable_start(ode, gamma_graz):
    with pytest.raises(EscapeError):
        excursion(ode.with_gamma(gamma_graz + 1e-3), PoincareState(np.nan, 0.0, -1.0))


def test_trajectory_regimes(ode, gamma_graz):
    p = ode.with_gamma(gamma_graz + 1e-3)
    rows = trajectory(p, PoincareState(0.0, grazing_data(p).t_graz, -1.0), segments=2)
    assert {r[4] for r in rows} == {"left", "sliding"}
    ts = [r[0] for r in rows]
    assert all(b >= a for a, b in zip(ts, ts[1:]))
    assert all(r[1] <= 1e-11 for r in rows)
