import csv

import numpy as np
import pytest

from grazslide.config import DEFAULTS
from grazslide.continuation import (DIAGRAM_COLUMNS, Branch, _collision_distance, _point_at, affine_seed,
                                    base_orbit_branch, continue_branch, detect_fold, emit_diagram,
                                    find_orbit, fold_pairs, gamma_map_run, split_segments, standard_words,
                                    start_branch)
from grazslide.errors import GrazslideError, MisidentifiedOrbitError
from grazslide.ode_model import PoincareState, gamma_return, grazing_data

TWO_PI = 2 * np.pi
FOLD_CFG = DEFAULTS.override(min_step=1e-6, fold_bracket=1e-10)


@pytest.fixture(scope="module")
def x_pair(ode, gamma_graz):
    """The X and Xbar2 branches continued up to their common fold."""
    rng = (gamma_graz, gamma_graz + 0.004)
    a = continue_branch(ode, start_branch(ode, "RLR", gamma_graz + 1e-6, FOLD_CFG), rng, 5e-4, "X", FOLD_CFG)
    b = continue_branch(ode, start_branch(ode, "RLL", gamma_graz + 1e-6, FOLD_CFG), rng, 5e-4, "Xbar2",
                        FOLD_CFG)
    return a, b, detect_fold(ode, a, b, FOLD_CFG)


def test_split_segments():
    assert split_segments("RLRLR") == ["R", "LR", "LR"]
    with pytest.raises(ValueError):
        split_segments("RLRL")


def test_standard_words():
    w = standard_words(4)
    assert w["X"] == "RLR" and w["Xbar2"] == "RLL"
    assert w["X1Y"] == "RLRLR" and w["X1Ybar0"] == "RLRRR"
    assert w["X4Y"] == "RLR" * 4 + "LR"
    assert len(w) + 1 == 12  # with the base orbit L
    assert fold_pairs(2) == [("X", "Xbar2"), ("X1Y", "X1Ybar0"), ("X2Y", "X2Ybar0")]


def test_x1y_orbit(ode, gamma_graz):
    p = ode.with_gamma(gamma_graz + 5e-4)
    pt = start_branch(ode, "RLRLR", p.gamma)
    assert pt.loops == 5 and pt.period_segments == 3
    assert pt.word.count("R") == 3
    assert pt.residual < DEFAULTS.orbit_tol
    assert pt.stability == "stable"
    # composing the Gamma map once per sliding segment closes the orbit
    s, loops = pt.orbit[0], 0
    for _ in range(pt.period_segments):
        s, n = gamma_return(p, s)
        loops += n
    assert loops == pt.loops
    assert abs(s.Z - pt.orbit[0].Z) < 1e-6
    assert abs(np.mod(s.t - pt.orbit[0].t + np.pi, TWO_PI) - np.pi) < 1e-6


def test_single_loop_orbit_unstable(ode, gamma_graz):
    gd = grazing_data(ode)
    p = ode.with_gamma(gamma_graz + 1e-3)
    pt = find_orbit(p, "R", PoincareState(0.0, gd.t_graz, -1.0), segments=1)
    assert pt.loops == 1 and pt.stability == "unstable"


def test_below_grazing_has_no_sliding_orbit(ode, gamma_graz):
    gd = grazing_data(ode)
    with pytest.raises(MisidentifiedOrbitError):
        find_orbit(ode.with_gamma(gamma_graz - 1e-3), "RLRLR", PoincareState(0.0, gd.t_graz, -1.0))


def test_word_without_sliding_rejected(ode, gamma_graz):
    with pytest.raises(MisidentifiedOrbitError):
        find_orbit(ode.with_gamma(gamma_graz + 1e-3), "LLL", PoincareState(0.0, 0.0, -1.0))


def test_segment_count_mismatch(ode, gamma_graz):
    p = ode.with_gamma(gamma_graz + 1e-3)
    with pytest.raises(ValueError):
        find_orbit(p, "RLRLR", PoincareState(0.0, grazing_data(p).t_graz, -1.0), segments=2)


def affine_discrepancy(ode, gamma_graz, word, mu):
    q = ode.with_gamma(gamma_graz + mu)
    seeds, rotated = affine_seed(q, word)
    pt = find_orbit(q, rotated, seeds)
    exact = np.array([[s.t, s.Z] for s in pt.orbit])
    model = np.array([[s.t, s.Z] for s in seeds])
    return float(np.max(np.abs(exact - model)))


def test_near_grazing_agreement(ode, gamma_graz):
    d4 = affine_discrepancy(ode, gamma_graz, "RLRLR", 1e-4)
    d5 = affine_discrepancy(ode, gamma_graz, "RLRLR", 1e-5)
    assert d4 / d5 > 5


def test_diag_value_tends_to_loop_count(ode, gamma_graz):
    pt = start_branch(ode, "RLRLR", gamma_graz + 1e-7)
    assert all(abs(pt.diag_value(i) - 5) < 1e-3 for i in range(pt.loops))


def test_fold_of_x_branch(x_pair, gamma_graz):
    a, b, fold = x_pair
    assert fold.verdict == "fold"
    assert fold.gamma_k - gamma_graz == pytest.approx(0.0026, abs=5e-4)
    assert fold.bracket[1] - fold.bracket[0] <= 1e-6
    assert fold.gamma_k > gamma_graz
    assert a.termination == b.termination == "min-step"
    assert a.points[0].stability != b.points[0].stability


def test_branch_points_monotone(x_pair):
    for br in x_pair[:2]:
        g = [q.gamma for q in br.points]
        assert all(y > x for x, y in zip(g, g[1:]))


def test_fold_separation_scaling(ode, x_pair):
    """Orbit separation near the fold shrinks linearly in gamma_k - gamma."""
    a, b, fold = x_pair
    ha, hb = a.points[-2:], b.points[-2:]
    dist, seps = [], []
    for d in 3.2e-5 * 0.5 ** np.arange(6):
        qa = _point_at(ode, a, fold.gamma_k - d, FOLD_CFG, ha)
        qb = _point_at(ode, b, fold.gamma_k - d, FOLD_CFG, hb)
        assert qa is not None and qb is not None
        ha, hb = [ha[-1], qa], [hb[-1], qb]
        dist.append(d)
        seps.append(_collision_distance(qa, qb))
    assert all(s < 1e-2 for s in seps)
    assert all(y < x for x, y in zip(seps, seps[1:]))
    slope = np.polyfit(np.log(dist), np.log(seps), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.1)


def test_no_fold_between_disjoint_branches(ode, gamma_graz, x_pair):
    x4y = Branch("X4Y", [start_branch(ode, standard_words(4)["X4Y"], gamma_graz + 1e-6)])
    res = detect_fold(ode, x_pair[0], x4y)
    assert res.verdict == "no-fold"


def _distance(pt, s):
    ref = pt.orbit[0]
    return max(abs(s.Z - ref.Z), abs(np.mod(s.t - ref.t + np.pi, TWO_PI) - np.pi))


def long_run_verdict(p, pt, iterates=1000, eps=1e-6):
    """Follow a perturbed orbit for about ``iterates`` Gamma-map steps: 'stable' if it returns, else 'unstable'."""
    v = np.array([pt.orbit[0].t, pt.orbit[0].Z + eps])
    periods = -(-iterates // pt.period_segments)
    d = eps
    for _ in range(periods):
        try:
            end = gamma_map_run(p, v, pt.period_segments, expected_loops=pt.loops)[-1].end
        except GrazslideError:
            return "unstable"
        d = _distance(pt, end)
        if d > 1e-3:
            return "unstable"
        v = np.array([end.t, end.Z])
    return "stable" if d < eps else "unstable"


@pytest.mark.slow
@pytest.mark.parametrize("label", ["R", "X", "Xbar2", "X1Y", "X1Ybar0"])
def test_monodromy_agrees_with_simulation(ode, gamma_graz, label):
    word = standard_words(1)[label]
    for mu in (1e-4, 5e-4, 1e-3, 1.5e-3, 2e-3):
        pt = start_branch(ode, word, gamma_graz + mu)
        if pt.stability == "marginal":
            continue
        assert long_run_verdict(ode.with_gamma(gamma_graz + mu), pt) == pt.stability, (label, mu)


def test_base_orbit_branch(ode, gamma_graz):
    br = base_orbit_branch(ode, gamma_graz - np.array([0.01, 0.005, 0.0]) )
    assert len(br.points) == 2
    assert all(q.stability == "stable" for q in br.points)
    assert all(q.section_points[0].X < 0 for q in br.points)


def test_empty_diagram_is_header_only(tmp_path, gamma_graz):
    path = tmp_path / "d.csv"
    assert emit_diagram([], path, gamma_graz) == 0
    assert path.read_text() == ",".join(DIAGRAM_COLUMNS) + "\n"


def test_diagram_rows_ordered(tmp_path, x_pair, gamma_graz):
    path = tmp_path / "d.csv"
    n = emit_diagram([x_pair[1], x_pair[0]], path, gamma_graz)
    rows = list(csv.DictReader(path.open()))
    assert len(rows) == n == len(x_pair[0].points) + len(x_pair[1].points)
    keys = [(r["label"], float(r["gamma_minus_gamma_graz"])) for r in rows]
    assert keys == sorted(keys)
    assert {r["stability"] for r in rows} <= {"stable", "unstable", "marginal"}
