"""Numerical check of the sufficient conditions for infinitely many stable
X^k Y-cycles, plus direct enumeration of those cycles.

The conditions are evaluated in floating point with explicit tolerances;
every verdict carries the witnesses it was decided on.
"""

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULTS
from .errors import DegenerateError, DomainError, EigenConditionError, GrazslideError
from .linalg import eigenvalues3, null_vector
from .normal_form import build_map, side, solve_cycle, word_matrices
from .words import as_word, concat, flip, pairing_alpha, power

E1 = np.array([1.0, 0.0, 0.0])


@dataclass
class EigenFrame:
    lambda1: float
    lambda2: float
    others: np.ndarray
    zeta1: np.ndarray
    zeta2: np.ndarray
    omega1: np.ndarray
    omega2: np.ndarray
    residuals: dict


def eigen_frame(M, tol=DEFAULTS.equality_tol):
    """Biorthogonal eigen-data for the eigenvalues ``lambda1 > 1 > lambda2 > 0`` of ``M``.

    Right eigenvectors have unit norm with their largest entry positive; left
    eigenvectors are scaled so that ``omega_j . zeta_j = 1``.
    """
    M = np.asarray(M, dtype=float)
    eigs = eigenvalues3(M)
    real = [e.real for e in eigs if abs(e.imag) <= 1e-12 * (1.0 + abs(e))]
    above = [r for r in real if r > 1.0]
    if not above:
        raise EigenConditionError("lambda1 > 1 (no real eigenvalue above 1)", eigs)
    lam1 = max(above)
    below = [r for r in real if 0.0 < r < 1.0]
    if not below:
        raise EigenConditionError("1 > lambda2 > 0 (no real eigenvalue in (0, 1))", eigs)
    lam2 = min(below, key=lambda r: abs(r * lam1 - 1.0))
    rest = list(eigs)
    for lam in (lam1, lam2):
        j = int(np.argmin([abs(e - lam) for e in rest]))
        rest.pop(j)
    others = np.array(rest)
    gap = min(abs(lam1 - lam2), *(abs(o - lam) for o in others for lam in (lam1, lam2)))
    if gap <= tol * (1.0 + abs(lam1)):
        raise EigenConditionError("multiplicity one (eigenvalues not separated)", eigs)

    ident = np.eye(3)
    zeta = [null_vector(M - lam * ident) for lam in (lam1, lam2)]
    omega = []
    for lam, z in zip((lam1, lam2), zeta):
        w = null_vector(M.T - lam * ident)
        omega.append(w / (w @ z))
    residuals = {
        "right": max(np.linalg.norm(M @ z - lam * z) for lam, z in zip((lam1, lam2), zeta)),
        "left": max(np.linalg.norm(w @ M - lam * w) for lam, w in zip((lam1, lam2), omega)),
        "biorth": max(abs(omega[0] @ zeta[1]), abs(omega[1] @ zeta[0])),
    }
    return EigenFrame(lam1, lam2, others, zeta[0], zeta[1], omega[0], omega[1], residuals)


def matrix_C(frame, M_Y):
    W = np.vstack([frame.omega1, frame.omega2])
    Z = np.column_stack([frame.zeta1, frame.zeta2])
    C = W @ np.asarray(M_Y, dtype=float) @ Z
    return C, float(np.linalg.det(C))


def symbol_at(x, y, i):
    """Symbol ``S_i`` of the bi-infinite sequence X^inf Y X^inf with ``S_0 = Y_0``."""
    n, p = len(x), len(y)
    if 0 <= i < p:
        return y[i]
    if i >= p:
        return x[(i - p) % n]
    return x[i % n]


@dataclass
class HomoclinicOrbit:
    indices: list
    points: np.ndarray
    symbols: list
    sides: list
    x_cycle: object
    frame: EigenFrame
    y0: np.ndarray
    stable_defect: float
    forward_converged: bool
    forward_margin: float
    backward_ratio_error: float
    backward_tail_ok: bool

    def point(self, i):
        return self.points[self.indices.index(i)]


def homoclinic_orbit(m, x, y, alpha=None, window=None, tol=DEFAULTS.equality_tol,
                     sigma_tol=DEFAULTS.sigma_tol, cfg=DEFAULTS):
    """The orbit through ``y0 = x0 - (e1.x0 / e1.zeta1) zeta1`` over a finite window.

    ``window = (backward_periods, forward_cap_periods)``. Forward iterates
    follow S by forced branches; at each period boundary the component along
    ``zeta1`` (unstable direction) is measured and removed, so rounding error
    does not grow. The measurement at the first period boundary after Y is
    reported as ``stable_defect``: it vanishes iff the forward orbit of
    ``y0`` lands in the stable subspace of the X-cycle. Backward iterates use
    the exact formula ``x0 + lambda1**-k (y0 - x0)`` and forced iteration
    within each period.
    """
    x, y = as_word(x), as_word(y)
    n, p = len(x), len(y)
    back, cap = window if window is not None else (cfg.backward_periods, cfg.forward_cap_periods)
    xc = solve_cycle(m, x, sigma_tol=sigma_tol)
    M_X, _ = word_matrices(m, x)
    frame = eigen_frame(M_X, tol)
    x0 = xc.points[0]
    z1 = frame.zeta1
    e1z1 = z1[0]
    if abs(e1z1) <= tol * np.linalg.norm(z1):
        raise DegenerateError(f"e1.zeta1 = {e1z1:.3e} vanishes; y0 undefined")
    y0 = x0 - (x0[0] / e1z1) * z1
    scale = 1.0 + np.max(np.abs(xc.points))

    indices, pts = [0], [y0]
    cur = y0
    for i in range(p):
        cur = m.branch(y[i], cur)
        indices.append(i + 1)
        pts.append(cur)

    stable_defect = None
    converged = False
    extra = None
    period = 0
    idx = p
    while period < cap:
        d = cur - x0
        c1 = frame.omega1 @ d
        if stable_defect is None:
            stable_defect = abs(c1) / scale
        cur = cur - c1 * z1
        pts[-1] = cur
        c2 = abs(frame.omega2 @ (cur - x0))
        if extra is None and c2 <= cfg.forward_converge_tol * scale:
            converged = True
            extra = cfg.forward_safety_periods
        if extra is not None:
            if extra == 0:
                break
            extra -= 1
        for j in range(n):
            cur = m.branch(x[j], cur)
            idx += 1
            indices.append(idx)
            pts.append(cur)
        period += 1

    # forward margin: worst first-coordinate excursion from the cycle over the
    # last period, relative to the cycle's distance from Sigma
    last = np.array(pts[-n - 1:-1]) if len(pts) > n else np.array(pts)
    start_phase = (indices[-n - 1] - p) % n if len(pts) > n else 0
    cyc = np.array([xc.points[(start_phase + j) % n] for j in range(len(last))])
    gap = np.min(np.abs(xc.points[:, 0]))
    forward_margin = float(np.max(np.abs(last[:, 0] - cyc[:, 0])) / gap) if gap > 0 else np.inf

    # backward window
    lam1 = frame.lambda1
    back_idx, back_pts = [], []
    diffs = np.zeros((back, n))
    for k in range(back, 0, -1):
        base = x0 + lam1 ** (-k) * (y0 - x0)
        run = [base]
        for j in range(n - 1):
            run.append(m.branch(x[j], run[-1]))
        for j, v in enumerate(run):
            back_idx.append(-k * n + j)
            back_pts.append(v)
            diffs[k - 1, j] = v[0] - xc.points[j][0]
    ratio_err = 0.0
    for j in range(n):
        col = diffs[:, j]
        if np.all(np.abs(col[:-1]) > 1e-300):
            ratios = col[1:] / col[:-1]
            ratio_err = max(ratio_err, float(np.max(np.abs(ratios * lam1 - 1.0))))
    # monotone approach to x_j: sign at k = 1 and in the limit decide every k >= 1
    tail_ok = True
    for j in range(n):
        if side(xc.points[j], sigma_tol) != x[j]:
            tail_ok = False
        s1 = side(np.array([xc.points[j][0] + diffs[0, j], 0.0, 0.0]), sigma_tol)
        if s1 not in (x[j], "S"):
            tail_ok = False

    all_idx = back_idx + indices
    all_pts = np.array(back_pts + pts)
    symbols = [symbol_at(x, y, i) for i in all_idx]
    sides = [side(v, sigma_tol) for v in all_pts]
    return HomoclinicOrbit(
        indices=all_idx,
        points=all_pts,
        symbols=symbols,
        sides=sides,
        x_cycle=xc,
        frame=frame,
        y0=y0,
        stable_defect=float(stable_defect if stable_defect is not None else np.inf),
        forward_converged=converged,
        forward_margin=forward_margin,
        backward_ratio_error=ratio_err,
        backward_tail_ok=tail_ok,
    )


@dataclass
class Condition:
    name: str
    passed: bool
    witnesses: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    reason: str = ""

    def to_dict(self):
        return {
            "verdict": "pass" if self.passed else "fail",
            "reason": self.reason,
            "witnesses": _jsonable(self.witnesses),
            "tolerances": _jsonable(self.tolerances),
        }


@dataclass
class TheoremReport:
    x: str
    y: str
    alpha: int
    conditions: dict
    detC: float = float("nan")
    homoclinic: HomoclinicOrbit = None

    @property
    def overall(self):
        return all(c.passed for c in self.conditions.values())

    def failed(self):
        return [name for name, c in self.conditions.items() if not c.passed]

    def to_dict(self):
        orbit = []
        if self.homoclinic is not None:
            h = self.homoclinic
            orbit = [
                {"i": i, "y": v.tolist(), "S": s, "side": sd}
                for i, v, s, sd in zip(h.indices, h.points, h.symbols, h.sides)
            ]
        return {
            "x": self.x,
            "y": self.y,
            "alpha": self.alpha,
            "overall": "pass" if self.overall else "fail",
            "detC": self.detC,
            "conditions": {k: c.to_dict() for k, c in self.conditions.items()},
            "homoclinic_points": orbit,
        }


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(u) for k, u in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(u) for u in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, np.generic):
        return v.item()
    return v


CONDITION_NAMES = ("i", "ii", "iii", "iv_a", "iv_b", "iv_c", "iv_d")


def verify(params, x, y, tol=None, cfg=DEFAULTS):
    """Evaluate conditions (i)-(iv) for the word pair ``(x, y)``.

    ``tol`` sets both the equality tolerance and the on-Sigma tolerance;
    by default they come from ``cfg``.
    """
    x, y = as_word(x), as_word(y)
    alpha = pairing_alpha(x, y)
    if alpha is None:
        raise DomainError(f"words {x}, {y} do not satisfy XY = (YX) flipped at 0 and some alpha")
    eq_tol = cfg.equality_tol if tol is None else tol
    s_tol = cfg.sigma_tol if tol is None else tol
    m = build_map(params)
    M_X, _ = word_matrices(m, x)
    M_Y, _ = word_matrices(m, y)
    conds = {}
    report = TheoremReport(str(x), str(y), alpha, conds)

    eigs = eigenvalues3(M_X)
    try:
        frame = eigen_frame(M_X, eq_tol)
    except EigenConditionError as exc:
        conds["i"] = Condition("i", False, {"eigenvalues": eigs}, {"equality": eq_tol}, str(exc))
        frame = None
    if frame is not None:
        prod = frame.lambda1 * frame.lambda2
        others_ok = bool(np.all(np.abs(frame.others) < frame.lambda2))
        ok = abs(prod - 1.0) <= eq_tol and others_ok
        reason = "" if ok else (
            "lambda2 != 1/lambda1" if abs(prod - 1.0) > eq_tol else "|other eigenvalues| >= lambda2")
        conds["i"] = Condition("i", ok, {
            "eigenvalues": eigs, "lambda1": frame.lambda1, "lambda2": frame.lambda2,
            "lambda1_times_lambda2": prod,
        }, {"equality": eq_tol}, reason)

        C, detC = matrix_C(frame, M_Y)
        report.detC = detC
        e1z1 = float(frame.zeta1[0])
        ok = abs(e1z1) > eq_tol and frame.lambda2 < detC < 1.0
        reason = "" if ok else ("e1.zeta1 = 0" if abs(e1z1) <= eq_tol else "lambda2 < det(C) < 1 violated")
        conds["ii"] = Condition("ii", ok, {
            "C": C, "detC": detC, "e1_zeta1": e1z1, "zeta1": frame.zeta1, "zeta2": frame.zeta2,
            "omega1": frame.omega1, "omega2": frame.omega2, "frame_residuals": frame.residuals,
        }, {"equality": eq_tol})
        conds["ii"].reason = reason
    else:
        conds["ii"] = Condition("ii", False, {}, {}, "requires the eigen-frame of condition (i)")

    try:
        xc = solve_cycle(m, x, sigma_tol=s_tol)
        ok = xc.admissible and not xc.on_boundary
        conds["iii"] = Condition("iii", ok, {
            "points": xc.points, "sides": xc.sides, "residual": xc.residual,
        }, {"sigma": s_tol}, "" if ok else "X-cycle not admissible or touches Sigma")
    except GrazslideError as exc:
        conds["iii"] = Condition("iii", False, {}, {"sigma": s_tol}, str(exc))

    orbit = None
    if frame is not None:
        try:
            orbit = homoclinic_orbit(m, x, y, alpha, tol=eq_tol, sigma_tol=s_tol, cfg=cfg)
        except GrazslideError as exc:
            for name in ("iv_a", "iv_b", "iv_c", "iv_d"):
                conds[name] = Condition(name, False, {}, {}, str(exc))
    else:
        for name in ("iv_a", "iv_b", "iv_c", "iv_d"):
            conds[name] = Condition(name, False, {}, {}, "requires the eigen-frame of condition (i)")

    if orbit is not None:
        report.homoclinic = orbit
        bad = [i for i, s, sd in zip(orbit.indices, orbit.symbols, orbit.sides)
               if sd != "S" and sd != s]
        ok = (not bad and orbit.stable_defect <= eq_tol and orbit.backward_tail_ok
              and orbit.forward_converged and orbit.forward_margin < 0.5)
        reasons = []
        if bad:
            reasons.append(f"side mismatch at indices {bad[:10]}")
        if orbit.stable_defect > eq_tol:
            reasons.append("forward orbit of y0 misses the stable subspace of the X-cycle")
        if not orbit.backward_tail_ok:
            reasons.append("backward tail changes side")
        if not orbit.forward_converged or orbit.forward_margin >= 0.5:
            reasons.append("forward orbit not certified near the X-cycle")
        conds["iv_a"] = Condition("iv_a", ok, {
            "mismatched_indices": bad, "stable_defect": orbit.stable_defect,
            "backward_ratio_error": orbit.backward_ratio_error,
            "backward_tail_ok": orbit.backward_tail_ok,
            "forward_converged": orbit.forward_converged,
            "forward_margin": orbit.forward_margin,
            "window": [min(orbit.indices), max(orbit.indices)],
        }, {"equality": eq_tol, "sigma": s_tol}, "; ".join(reasons))

        y0 = orbit.y0
        ok = side(y0, s_tol) == "S"
        conds["iv_b"] = Condition("iv_b", ok, {"y0": y0, "e1_y0": y0[0]}, {"sigma": s_tol},
                                  "" if ok else "y0 not on Sigma")

        ya = orbit.point(alpha)
        ok = side(ya, s_tol) == "S"
        conds["iv_c"] = Condition("iv_c", ok, {"alpha": alpha, "y_alpha": ya, "e1_y_alpha": ya[0]},
                                  {"sigma": s_tol}, "" if ok else "y_alpha not on Sigma")

        n = len(x)
        on = {i for i, sd in zip(orbit.indices, orbit.sides) if sd == "S" and i >= 0}
        pairs = sorted(i for i in on if i + n in on)
        ok = not pairs
        conds["iv_d"] = Condition("iv_d", ok, {"on_sigma_indices": sorted(on), "pairs": pairs},
                                  {"sigma": s_tol}, "" if ok else "y_i and y_(i+n) both on Sigma")

    report.conditions = {k: conds[k] for k in CONDITION_NAMES}
    return report


@dataclass
class EnumRow:
    k: int
    kind: str
    word: str
    cycle: object = None
    error: str = ""

    @property
    def admissible(self):
        return self.cycle is not None and self.cycle.admissible

    @property
    def stability(self):
        return self.cycle.stability if self.cycle is not None else "none"


@dataclass
class AttractorTable:
    x: str
    y: str
    rows: list

    def by_kind(self, kind):
        return [r for r in self.rows if r.kind == kind]

    @property
    def k_min(self):
        """Smallest k such that every X^k'Y with k <= k' <= k_max is admissible and stable."""
        main = self.by_kind("XkY")
        k_min = None
        for r in reversed(main):
            if r.admissible and not r.cycle.on_boundary and r.stability == "stable":
                k_min = r.k
            else:
                break
        return k_min

    def csv_rows(self):
        out = []
        for r in self.rows:
            if r.cycle is None:
                continue
            c = r.cycle
            mx = float(np.max(c.moduli))
            for i, (pt, sd) in enumerate(zip(c.points, c.sides)):
                out.append([r.word, r.k, i, pt[0], pt[1], pt[2], sd, int(c.admissible), mx])
        return out


CYCLE_CSV_HEADER = ["word", "k", "i", "x1", "x2", "x3", "side", "admissible", "max_eig_modulus"]


def enumerate_attractors(params, x, y, k_max=DEFAULTS.k_max, sigma_tol=DEFAULTS.sigma_tol):
    """Solve and classify the X^k Y and X^k Y^(0-flipped) cycles for k = 0..k_max."""
    x, y = as_word(x), as_word(y)
    m = build_map(params)
    y_flip = flip(y, 0)
    rows = []
    for k in range(k_max + 1):
        for kind, tail in (("XkY", y), ("XkY0", y_flip)):
            w = concat(power(x, k), tail)
            try:
                rows.append(EnumRow(k, kind, str(w), solve_cycle(m, w, sigma_tol=sigma_tol)))
            except GrazslideError as exc:
                rows.append(EnumRow(k, kind, str(w), None, str(exc)))
    return AttractorTable(str(x), str(y), rows)
