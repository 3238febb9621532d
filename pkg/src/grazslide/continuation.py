"""Periodic orbits of the Filippov system through the return map on Gamma.

An orbit is a fixed point of the Gamma map iterated once per sliding
segment. Its symbolic word records, for each crossing of ``Y = 0`` near the
base orbit, whether the crossing is real (L) or virtual (R); the same word
labels the corresponding cycle of the piecewise-linear return map.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULTS
from .errors import ConvergenceError, EscapeError, GrazslideError, MisidentifiedOrbitError
from .normal_form import PwlMap, classify_moduli, solve_cycle
from .ode_model import (TWO_PI, LeftFlow, PoincareState, excursion, grazing_data,
                        leading_order_normal_form)
from .words import as_word, flip, power

DIAGRAM_COLUMNS = ("gamma_minus_gamma_graz", "label", "stability", "X_value", "diag_value", "diag_index")


@dataclass
class BranchPoint:
    gamma: float
    word: str
    orbit: list  # Gamma states, one per sliding segment
    period_segments: int
    loops: int
    stability: str
    multipliers: np.ndarray
    section_points: list  # the (possibly virtual) crossings of Y = 0, one per loop
    residual: float = 0.0
    iterations: int = 0

    @property
    def X_values(self):
        return np.array([s.X for s in self.section_points])

    def diag_value(self, index, scale=DEFAULTS.diag_scale):
        return self.loops + scale * self.X_values[index]


@dataclass
class Branch:
    label: str
    points: list = field(default_factory=list)
    termination: str = ""
    error: str = ""
    fold: tuple = None  # (gamma_k, partner label)

    @property
    def word(self):
        return self.points[0].word if self.points else ""

    @property
    def gamma_end(self):
        return self.points[-1].gamma if self.points else np.nan

    def diag_index(self):
        """Index of the crossing closest to ``X = 0`` at the branch's upper end."""
        if not self.points:
            return 0
        return int(np.argmin(np.abs(self.points[-1].X_values)))


def gamma_map_run(p, v, segments, flow=None, cfg=DEFAULTS, expected_loops=1):
    """Apply the Gamma map ``segments`` times from ``(t, Z) = v``; returns the excursions."""
    flow = flow or LeftFlow(p, cfg)
    s = PoincareState(0.0, float(v[0]), float(v[1]))
    runs = []
    for _ in range(segments):
        ex = excursion(p, s, cfg, expected_loops, flow)
        runs.append(ex)
        s = ex.end
    return runs


def split_segments(word):
    """Pieces ``L...LR`` of a word ending in R, one per Gamma-map iterate."""
    word = str(as_word(word))
    if not word.endswith("R"):
        raise ValueError(f"word {word} must end in R to start on Gamma")
    pieces, cur = [], ""
    for c in word:
        cur += c
        if c == "R":
            pieces.append(cur)
            cur = ""
    return pieces


def _verdict(multipliers, marginal_tol):
    mod = np.abs(multipliers)
    if np.any(np.abs(mod - 1.0) <= marginal_tol):
        return "marginal"
    return "stable" if classify_moduli(mod) == "stable" else "unstable"


class _Shooting:
    """Multiple-shooting residual: one Gamma point per sliding segment."""

    def __init__(self, p, word, cfg, flow):
        self.p, self.cfg, self.flow = p, cfg, flow
        self.pieces = split_segments(word)
        self.n = len(self.pieces)
        self.loops = len(word)
        mu = abs(p.gamma - grazing_data(p).gamma_graz)
        self.h = min(cfg.orbit_fd_step, 1e-3 * mu) if mu > 0 else cfg.orbit_fd_step

    def segment(self, j, v):
        return excursion(self.p, PoincareState(0.0, float(v[0]), float(v[1])), self.cfg,
                         len(self.pieces[j]), self.flow)

    def evaluate(self, V):
        V = V.reshape(self.n, 2)
        runs = [self.segment(j, V[j]) for j in range(self.n)]
        return runs, self.residual(V, runs)

    def residual(self, V, runs):
        V = V.reshape(self.n, 2)
        r = np.empty((self.n, 2))
        for j, ex in enumerate(runs):
            nxt = V[(j + 1) % self.n].copy()
            if j == self.n - 1:
                nxt[0] += TWO_PI * self.loops
            r[j] = (ex.end.t - nxt[0], ex.end.Z - nxt[1])
        return r.ravel()

    def matches(self, runs):
        return all(ex.symbols == piece for ex, piece in zip(runs, self.pieces))

    def segment_jacobian(self, j, v, ex):
        """One-sided differences, stepping to the side that keeps the segment's crossing pattern."""
        base = np.array([ex.end.t, ex.end.Z])
        J = np.empty((2, 2))
        for k in range(2):
            for sgn in (1.0, -1.0):
                e = np.zeros(2)
                e[k] = sgn * self.h
                try:
                    pert = self.segment(j, v + e)
                except GrazslideError:
                    continue
                if pert.symbols == ex.symbols:
                    J[:, k] = (np.array([pert.end.t, pert.end.Z]) - base) / (sgn * self.h)
                    break
            else:
                raise ConvergenceError(f"Gamma map not differentiable at {v}: both sides change the "
                                       f"crossing pattern", last=v)
        return J

    def jacobians(self, V, runs):
        V = V.reshape(self.n, 2)
        return [self.segment_jacobian(j, V[j], runs[j]) for j in range(self.n)]

    def full_jacobian(self, blocks):
        n = self.n
        J = np.zeros((2 * n, 2 * n))
        for j, B in enumerate(blocks):
            J[2 * j:2 * j + 2, 2 * j:2 * j + 2] = B
            k = (j + 1) % n
            J[2 * j:2 * j + 2, 2 * k:2 * k + 2] -= np.eye(2)
        return J


def _no_sliding(word, exc):
    return MisidentifiedOrbitError(f"the orbit from the seed never reaches X = 0, so it has no sliding "
                                   f"segment and cannot be {word} ({exc})", observed="L", expected=word)


def _seed_array(seed, n, p, word, cfg, flow):
    if isinstance(seed, PoincareState):
        seed = [seed]
    seed = list(seed)
    if len(seed) == n:
        return np.array([[s.t, s.Z] if isinstance(s, PoincareState) else s for s in seed], dtype=float)
    if len(seed) != 1:
        raise ValueError(f"need 1 or {n} seed points, got {len(seed)}")
    first = seed[0]
    v = np.array([first.t, first.Z] if isinstance(first, PoincareState) else first, dtype=float)
    V = [v]
    try:
        for ex in gamma_map_run(p, v, n - 1, flow, cfg, len(word)):
            V.append(np.array([ex.end.t, ex.end.Z]))
    except EscapeError as exc:
        raise _no_sliding(word, exc) from exc
    except GrazslideError as exc:
        raise ConvergenceError(f"cannot propagate the seed through {n} segments: {exc}", last=v) from exc
    return np.array(V)


def find_orbit(p, word, seed, segments=None, cfg=DEFAULTS, flow=None):
    """Periodic orbit with symbolic ``word``, by Newton on its points of Gamma.

    ``word`` lists the crossings of ``Y = 0`` in the order they are met from
    the first seed point and must end in R. ``seed`` is one Gamma point
    (the rest are generated by the Gamma map) or one per sliding segment.
    The unknowns are ``(t, Z)`` at the start of every segment (multiple
    shooting), so strongly unstable orbits stay well conditioned. Once all
    segments follow their piece of ``word``, steps that would change a
    piece are shortened, keeping Newton on one smooth piece of the map.
    Raises :class:`MisidentifiedOrbitError` if the converged orbit crosses
    ``Y = 0`` in a different pattern.
    """
    word = str(as_word(word))
    if "R" not in word:
        raise MisidentifiedOrbitError(f"word {word} has no sliding segment; it is not a Gamma orbit",
                                      expected=word)
    flow = flow or LeftFlow(p, cfg)
    sh = _Shooting(p, word, cfg, flow)
    if segments is not None and segments != sh.n:
        raise ValueError(f"word {word} has {sh.n} sliding segments, not {segments}")
    V = _seed_array(seed, sh.n, p, word, cfg, flow).ravel()
    try:
        runs, r = sh.evaluate(V)
    except EscapeError as exc:
        raise _no_sliding(word, exc) from exc
    except GrazslideError as exc:
        raise ConvergenceError(f"orbit {word}: seed does not return to Gamma ({exc})", last=V) from exc
    norm = np.max(np.abs(r))
    locked = sh.matches(runs)
    it = 0
    while norm >= cfg.orbit_tol:
        if it == cfg.orbit_max_iter:
            raise ConvergenceError(f"orbit {word}: no convergence in {it} iterations (residual {norm:.2e})",
                                   last=V, residual=norm)
        it += 1
        try:
            step = np.linalg.solve(sh.full_jacobian(sh.jacobians(V, runs)), -r)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"orbit {word}: singular Newton matrix", last=V, residual=norm) from exc
        lam = 1.0
        for _ in range(12):
            trial = V + lam * step
            try:
                truns, tr = sh.evaluate(trial)
                tnorm = np.max(np.abs(tr))
                if locked and not sh.matches(truns):
                    tnorm = np.inf
            except GrazslideError:
                tnorm = np.inf
            if tnorm < norm or tnorm < cfg.orbit_tol:
                break
            lam *= 0.5
        else:
            raise ConvergenceError(f"orbit {word}: line search failed (residual {norm:.2e})", last=V,
                                   residual=norm)
        V, runs, r, norm = trial, truns, tr, tnorm
        locked = locked or sh.matches(runs)

    observed = "".join(ex.symbols for ex in runs)
    if observed != word:
        raise MisidentifiedOrbitError(f"converged orbit crosses Y = 0 as {observed}, expected {word}",
                                      observed=observed, expected=word)
    monodromy = np.eye(2)
    for B in sh.jacobians(V, runs):
        monodromy = B @ monodromy
    multipliers = np.linalg.eigvals(monodromy)
    orbit = [PoincareState(0.0, float(t), float(z)) for t, z in V.reshape(sh.n, 2)]
    points = [lp.point for ex in runs for lp in ex.loops]
    return BranchPoint(float(p.gamma), observed, orbit, sh.n, len(points),
                       _verdict(multipliers, cfg.marginal_tol), multipliers, points, float(norm), it)


def affine_seed(p, word, cfg=DEFAULTS):
    """Gamma points of the leading-order ``word``-cycle, for ``p.gamma`` just above grazing.

    Each cycle point at an R is pushed through the linear discontinuity map.
    The returned word is ``word`` rotated to start right after its last R,
    and the points are listed in the order that rotated word meets them.
    """
    word = str(as_word(word))
    lo = leading_order_normal_form(p)
    mu = p.gamma - lo.grazing.gamma_graz
    cycle = solve_cycle(PwlMap(lo.A_L, lo.A_R, lo.b, mu), word, cfg.sigma_tol, cfg.cond_max)
    r = len(word) - 1 - word[::-1].index("R")
    rotated = word[r + 1:] + word[:r + 1]
    order = [(r + 1 + i) % len(word) for i in range(len(word))]
    seeds = []
    for loops_before, idx in enumerate(order):
        if word[idx] != "R" or loops_before == len(word) - 1:
            continue
        x = cycle.points[idx]
        t = lo.grazing.t_graz + x[1] + (p.beta1 + 1.0) * x[0] + TWO_PI * (loops_before + 1)
        z = lo.grazing.Z_graz + x[2] + p.beta2 * x[0]
        seeds.append(PoincareState(0.0, float(t), float(z)))
    x = cycle.points[r]
    first = PoincareState(0.0, float(lo.grazing.t_graz + x[1] + (p.beta1 + 1.0) * x[0]),
                          float(lo.grazing.Z_graz + x[2] + p.beta2 * x[0]))
    return [first] + seeds, rotated


def _orbit_array(pt):
    return np.array([[s.t, s.Z] for s in pt.orbit])


def _scaling_slope(p, V):
    """d(t, Z)/d gamma of each Gamma point if the orbit scales linearly with gamma - gamma_graz."""
    gd = grazing_data(p)
    mu = p.gamma - gd.gamma_graz
    if mu == 0.0:
        return np.zeros_like(V)
    periods = np.round((V[:, 0] - gd.t_graz) / TWO_PI)
    origin = np.column_stack([gd.t_graz + TWO_PI * periods, np.full(len(V), gd.Z_graz)])
    return (V - origin) / mu


def continue_branch(p, start, gamma_range, step, label=None, cfg=DEFAULTS):
    """Natural-parameter continuation in gamma from a converged point.

    Each new point is seeded by linear extrapolation of the last two (for
    the first step, by scaling the orbit about the grazing point, which is
    exact to leading order since cycles grow linearly in gamma). A
    failed step is halved until it falls below ``min_step``; successful
    steps grow back toward ``step``. Stops at the end of the range or at
    the minimum step (a fold or loss of admissibility).
    """
    lo, hi = gamma_range
    direction = 1.0 if hi >= start.gamma else -1.0
    end = hi if direction > 0 else lo
    branch = Branch(label or start.word, [start])
    base = p
    h = step
    while True:
        last = branch.points[-1]
        remaining = (end - last.gamma) * direction
        if remaining <= 1e-15:
            branch.termination = "range-end"
            return branch
        h = min(h, remaining)
        g = last.gamma + direction * h
        V = _orbit_array(last)
        if len(branch.points) > 1:
            prev = branch.points[-2]
            slope = (V - _orbit_array(prev)) / (last.gamma - prev.gamma)
        else:
            slope = _scaling_slope(base.with_gamma(last.gamma), V)
        seed = V + slope * (g - last.gamma)
        try:
            pt = find_orbit(base.with_gamma(g), last.word, seed, cfg=cfg)
            if pt.word != last.word:
                raise MisidentifiedOrbitError("orbit rotated along the branch", pt.word, last.word)
        except GrazslideError as exc:
            h *= 0.5
            if h < cfg.min_step:
                branch.termination = "min-step"
                branch.error = str(exc)
                return branch
            continue
        branch.points.append(pt)
        if pt.iterations <= 3:
            h = min(step, 2.0 * h)


def start_branch(p, word, gamma_start, cfg=DEFAULTS, label=None):
    """First point of the branch for ``word``, seeded from the affine model."""
    q = p.with_gamma(gamma_start)
    seeds, rotated = affine_seed(q, word, cfg)
    return find_orbit(q, rotated, seeds, cfg=cfg)


def _mismatch(a, b):
    """Positions where two words differ after the best cyclic alignment, or None if lengths differ."""
    if len(a) != len(b):
        return None
    best = None
    for s in range(len(b)):
        rb = b[s:] + b[:s]
        diff = [i for i in range(len(a)) if a[i] != rb[i]]
        if best is None or len(diff) < len(best):
            best = diff
    return best


@dataclass
class FoldResult:
    verdict: str  # "fold" or "no-fold"
    gamma_k: float = np.nan
    bracket: tuple = None
    certificate: float = np.nan  # |X| at the colliding crossing
    separation: float = np.nan  # distance between the two orbits' crossings at the lower bracket
    reason: str = ""


def _collision_distance(a, b):
    """Max-norm distance between two orbits' crossings, minimised over cyclic alignment."""
    xa = np.array([[q.X, q.t, q.Z] for q in a.section_points])
    xb = np.array([[q.X, q.t, q.Z] for q in b.section_points])
    if len(xa) != len(xb):
        return np.inf
    best = np.inf
    for s in range(len(xa)):
        d = np.roll(xa, -s, axis=0) - xb
        d[:, 1] = np.mod(d[:, 1] + np.pi, TWO_PI) - np.pi
        best = min(best, float(np.max(np.abs(d))))
    return best


def detect_fold(p, branch_a, branch_b, cfg=DEFAULTS, gap_tol=1e-2):
    """Locate the gamma where two branches meet, by bisection on their joint existence.

    Only words of equal length differing in exactly one symbol can collide.
    The bracket is refined to ``fold_bracket``; the certificate is ``|X|``
    of the crossing where the words differ, which tends to zero at the fold.
    """
    wa, wb = branch_a.word, branch_b.word
    diff = _mismatch(wa, wb)
    if diff is None or len(diff) != 1:
        return FoldResult("no-fold", reason=f"words {wa} and {wb} do not differ in exactly one symbol")
    if not branch_a.points or not branch_b.points:
        return FoldResult("no-fold", reason="empty branch")
    lo = min(branch_a.gamma_end, branch_b.gamma_end)
    a, b = _point_at(p, branch_a, lo, cfg), _point_at(p, branch_b, lo, cfg)
    if a is None or b is None:
        return FoldResult("no-fold", reason="branches do not coexist at their common end")
    gap = _collision_distance(a, b)
    if gap > gap_tol:
        return FoldResult("no-fold", separation=gap, reason=f"orbits stay {gap:.2e} apart at the branch ends")
    hi = max(branch_a.gamma_end, branch_b.gamma_end) + 2.0 * cfg.min_step
    if hi <= lo:
        hi = lo + cfg.fold_bracket
    hist_a = [q for q in branch_a.points if q.gamma < lo][-1:] + [a]
    hist_b = [q for q in branch_b.points if q.gamma < lo][-1:] + [b]

    def both(gamma):
        pa = _point_at(p, branch_a, gamma, cfg, hist_a)
        pb = _point_at(p, branch_b, gamma, cfg, hist_b) if pa is not None else None
        return pa, pb

    # widen until the pair no longer coexists
    while True:
        pa, pb = both(hi)
        if pa is None or pb is None:
            break
        lo, hist_a, hist_b = hi, [hist_a[-1], pa], [hist_b[-1], pb]
        hi += max(hi - hist_a[0].gamma, cfg.fold_bracket)
    while hi - lo > cfg.fold_bracket:
        mid = 0.5 * (lo + hi)
        pa, pb = both(mid)
        if pa is not None and pb is not None:
            lo, hist_a, hist_b = mid, [hist_a[-1], pa], [hist_b[-1], pb]
        else:
            hi = mid
    a, b = hist_a[-1], hist_b[-1]
    k = int(np.argmin(np.abs(a.X_values)))
    return FoldResult("fold", 0.5 * (lo + hi), (lo, hi), float(np.abs(a.X_values[k])),
                      _collision_distance(a, b))


def _point_at(p, branch, gamma, cfg, history=None):
    """Orbit of ``branch`` at ``gamma``, seeded by secant extrapolation of ``history``; None on failure."""
    history = history or [min(branch.points, key=lambda q: abs(q.gamma - gamma))]
    ref = history[-1]
    seed = _orbit_array(ref)
    if len(history) > 1 and history[-1].gamma != history[-2].gamma:
        prev = history[-2]
        seed = seed + (seed - _orbit_array(prev)) * (gamma - ref.gamma) / (ref.gamma - prev.gamma)
    try:
        pt = find_orbit(p.with_gamma(gamma), ref.word, seed, cfg=cfg)
    except GrazslideError:
        return None
    return pt if pt.word == ref.word else None


def base_orbit_branch(p, gammas):
    """The forced oscillation ``X_p`` (label L); it is an orbit of the full system for gamma < gamma_graz."""
    gd = grazing_data(p)
    lo = leading_order_normal_form(p.with_gamma(gd.gamma_graz))
    mult = np.linalg.eigvals(lo.A_L)
    verdict = _verdict(mult, DEFAULTS.marginal_tol)
    branch = Branch("L", termination="grazing")
    for g in sorted(gammas):
        if g >= gd.gamma_graz:
            continue
        X_max = g / gd.gamma_graz - 1.0
        pt = PoincareState(X_max, gd.t_graz, gd.Z_graz * g / gd.gamma_graz)
        branch.points.append(BranchPoint(float(g), "L", [], 0, 1, verdict, mult, [pt]))
    return branch


def standard_words(k_max=4):
    """The branch set of the standard diagram: label -> word."""
    x, y = "RLR", "LR"
    words = {"R": "R", "X": x, "Xbar2": str(flip(x, 2))}
    for k in range(1, k_max + 1):
        words[f"X{k}Y"] = str(power(x, k)) + y
        words[f"X{k}Ybar0"] = str(power(x, k)) + str(flip(y, 0))
    return words


def fold_pairs(k_max=4):
    return [("X", "Xbar2")] + [(f"X{k}Y", f"X{k}Ybar0") for k in range(1, k_max + 1)]


@dataclass
class Diagram:
    gamma_graz: float
    branches: list
    folds: dict  # (label_a, label_b) -> FoldResult


def build_diagram(p, gamma_max, step, k_max=4, gamma_min=None, cfg=DEFAULTS):
    """Continue the standard branch set over ``(gamma_graz, gamma_graz + gamma_max)`` and pair up the folds.

    Each sliding branch starts ``start_offset`` above grazing from the
    affine model. Partners that end together are passed to
    :func:`detect_fold`; a confirmed fold is stored on both branches.
    The base orbit L is sampled on ``(gamma_graz - gamma_min, gamma_graz)``.
    """
    gd = grazing_data(p)
    gamma_min = gamma_max if gamma_min is None else gamma_min
    words = standard_words(k_max)
    rng = (gd.gamma_graz, gd.gamma_graz + gamma_max)
    branches = {}
    for label, word in words.items():
        start = start_branch(p, word, gd.gamma_graz + cfg.start_offset, cfg)
        branches[label] = continue_branch(p, start, rng, step, label, cfg)
    folds = {}
    for a, b in fold_pairs(k_max):
        res = detect_fold(p, branches[a], branches[b], cfg)
        folds[(a, b)] = res
        if res.verdict == "fold":
            for one, other in ((a, b), (b, a)):
                branches[one].fold = (res.gamma_k, other)
                branches[one].termination = "fold"
    n_base = max(2, int(round(gamma_min / step)))
    base = base_orbit_branch(p, gd.gamma_graz - gamma_min * np.arange(n_base, 0, -1) / n_base)
    return Diagram(gd.gamma_graz, [base] + list(branches.values()), folds)


def diagram_rows(branches, gamma_graz, scale=DEFAULTS.diag_scale):
    rows = []
    for br in branches:
        i = br.diag_index()
        for pt in br.points:
            X = float(pt.X_values[i])
            rows.append({
                "gamma_minus_gamma_graz": pt.gamma - gamma_graz,
                "label": br.label,
                "stability": pt.stability,
                "X_value": X,
                "diag_value": pt.loops + scale * X,
                "diag_index": i,
            })
    rows.sort(key=lambda r: (r["label"], r["gamma_minus_gamma_graz"]))
    return rows


def emit_diagram(branches, path, gamma_graz, scale=DEFAULTS.diag_scale):
    """Write the bifurcation-diagram CSV; one row per branch point, ordered by label then gamma."""
    rows = diagram_rows(branches, gamma_graz, scale)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=DIAGRAM_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in r.items()})
    return len(rows)
