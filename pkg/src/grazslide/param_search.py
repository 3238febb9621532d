"""Finding normal-form parameters that produce infinitely many attractors.

Instead of imposing the eigenvalue and homoclinic conditions directly, three
polynomial conditions are solved: the second trace of M_X equals one, and
two components of auxiliary vectors built from the homoclinic point vanish.
Roots still have to pass :func:`grazslide.theorem.verify`.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULTS
from .errors import ConvergenceError, DegenerateError, GrazslideError
from .linalg import char_coeffs
from .normal_form import NormalFormParams, build_map, word_matrices
from .theorem import verify
from .words import as_word, concat, prefix

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])


@dataclass
class ConstructionResidual:
    r1: float
    r2: float
    r3: float
    y0: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray
    sigma_X: float

    @property
    def vector(self):
        return np.array([self.r1, self.r2, self.r3])

    @property
    def norm(self):
        return float(np.linalg.norm(self.vector))


def _y0_parts(m, xy, alpha):
    head = prefix(xy, alpha)
    M, P = word_matrices(m, head)
    return -(P @ m.b)[0] * m.mu, M[0, 1], head


def y0_from_alpha(m, xy, alpha):
    """Homoclinic starting point on Sigma whose alpha-th iterate returns to Sigma.

    Assumes both words end in R and ``delta_R = 0`` so the first and third
    coordinates of ``y0`` are zero.
    """
    num, den, head = _y0_parts(m, xy, alpha)
    if abs(den) <= 1e-14 * (1.0 + abs(num)):
        raise DegenerateError(f"e1.M e2 = {den:.3e} vanishes for prefix {head}; alpha = {alpha} is degenerate")
    return np.array([0.0, num / den, 0.0])


def residuals(params, x, y, alpha):
    """The three construction residuals, normalised so that only genuine roots remain.

    ``xi1`` and ``xi2`` are quadratic forms in ``psi1``, so they vanish
    trivially when ``psi1 = 0`` and inherit a pole from the ``y0``
    denominator ``d = e1.M e2``. Both are removed by evaluating them on the
    unit vector along ``d * psi1``: the roots with ``psi1 != 0`` are unchanged.
    ``y0`` and ``psi1`` are NaN when ``d`` vanishes.
    """
    x, y = as_word(x), as_word(y)
    if not (str(x).endswith("R") and str(y).endswith("R")):
        raise ValueError("construction assumes both words end in R")
    m = build_map(params)
    num, den, _ = _y0_parts(m, concat(x, y), alpha)
    M_X, P_X = word_matrices(m, x)
    M_Y, _ = word_matrices(m, y)
    scaled = P_X @ m.b * m.mu * den - (np.eye(3) - M_X) @ np.array([0.0, num, 0.0])
    size = np.linalg.norm(scaled)
    if size == 0.0:
        raise DegenerateError("psi1 vanishes; the construction conditions are void here")
    u1 = scaled / size
    u2 = M_Y @ u1
    Mu1 = M_X @ u1
    xi1 = Mu1 * u1[0] - u1 * Mu1[0]
    xi2 = M_X @ u2 * Mu1[0] - u2 * u1[0]
    sigma_X = char_coeffs(M_X)[1]
    if den != 0.0:
        y0 = np.array([0.0, num / den, 0.0])
        psi1 = scaled / den
    else:
        y0 = psi1 = np.full(3, np.nan)
    return ConstructionResidual(sigma_X - 1.0, xi1[1], xi2[0], y0, psi1, M_Y @ psi1, xi1, xi2, sigma_X)


def in_family_domain(sigma_L, sigma_R):
    """Membership of the domain where the closed-form family satisfies every condition."""
    return sigma_R > 1.0 and sigma_L > (sigma_R - 1.0) / (sigma_R * (sigma_R ** 2 + 1.0))


def closed_family(sigma_L, sigma_R):
    """Parameters for X = RLR, Y = LR as functions of the two free second traces."""
    if sigma_R == 0.0 or sigma_R == -1.0:
        raise ZeroDivisionError(f"closed family undefined at sigma_R = {sigma_R}")
    tau_R = -(sigma_R + 1.0)
    delta_L = (1.0 - sigma_L * sigma_R ** 2) / (sigma_R * (sigma_R + 1.0))
    tau_L = 1.0 / (sigma_R ** 2 + 1.0) - (sigma_L + sigma_R) / (sigma_R + 1.0)
    return NormalFormParams(tau_L, sigma_L, delta_L, tau_R, sigma_R, 0.0, 1.0)


@dataclass
class NewtonResult:
    params: NormalFormParams
    iterations: int
    residual_norm: float
    jacobian_cond: float
    history: list = field(default_factory=list)
    verified: bool = None
    failed_conditions: list = field(default_factory=list)

    @property
    def spurious(self):
        return self.verified is False


def _pack(z, sigma_L, sigma_R):
    tau_L, tau_R, delta_L = (float(v) for v in z)
    return NormalFormParams(tau_L, float(sigma_L), delta_L, tau_R, float(sigma_R), 0.0, 1.0)


def newton_solve(x, y, alpha, sigma_L, sigma_R, guess, cfg=DEFAULTS, check=True,
                 verify_tol=None, max_step=None):
    """Damped Newton on the three construction residuals over ``(tau_L, tau_R, delta_L)``.

    The Jacobian is by central differences; steps are optionally capped at
    ``max_step`` and then backtracked (Armijo) on the residual norm. After convergence the root is run through
    :func:`verify` unless ``check`` is false; a root that fails is flagged
    spurious rather than raised.
    """
    z = np.array(guess, dtype=float)
    if z.shape != (3,) or not np.all(np.isfinite(z)):
        raise ValueError(f"guess must be three finite numbers, got {guess}")

    def F(v):
        return residuals(_pack(v, sigma_L, sigma_R), x, y, alpha).vector

    r = F(z)
    norm = np.linalg.norm(r)
    history = [norm]
    cond = np.nan
    for it in range(1, cfg.newton_max_iter + 1):
        if norm < cfg.newton_tol:
            break
        J = np.empty((3, 3))
        for j in range(3):
            h = cfg.fd_rel_step * (1.0 + abs(z[j]))
            e = np.zeros(3)
            e[j] = h
            J[:, j] = (F(z + e) - F(z - e)) / (2.0 * h)
        cond = np.linalg.cond(J)
        if not np.isfinite(cond) or cond > 1e14:
            raise ConvergenceError(f"singular Jacobian (cond = {cond:.3e})", last=z, residual=norm)
        step = np.linalg.solve(J, -r)
        size = np.linalg.norm(step)
        if max_step is not None and size > max_step:
            step *= max_step / size
        lam = 1.0
        for _ in range(cfg.armijo_max_halvings):
            trial = z + lam * step
            try:
                rt = F(trial)
            except GrazslideError:
                rt = np.full(3, np.inf)
            nt = np.linalg.norm(rt)
            if nt <= (1.0 - 1e-4 * lam) * norm or nt < cfg.newton_tol:
                break
            lam *= cfg.armijo_factor
        else:
            if norm < 1e3 * cfg.newton_tol:
                break  # rounding floor
            raise ConvergenceError("line search failed", last=z, residual=norm)
        z, r, norm = trial, rt, nt
        history.append(norm)
    else:
        raise ConvergenceError(f"no convergence in {cfg.newton_max_iter} iterations", last=z, residual=norm)
    if norm >= cfg.newton_tol:
        raise ConvergenceError(f"stalled at residual {norm:.3e}", last=z, residual=norm)

    result = NewtonResult(_pack(z, sigma_L, sigma_R), len(history) - 1, float(norm), float(cond), history)
    if check:
        report = verify(result.params, x, y, tol=verify_tol)
        result.verified = report.overall
        result.failed_conditions = report.failed()
    return result


def _coords(p):
    return np.array([p.tau_L, p.tau_R, p.delta_L])


def grid_starts(guess, radius, points):
    """Grid of ``points**3`` starts in the box ``guess +- radius``, nearest first."""
    guess = np.asarray(guess, dtype=float)
    axis = np.linspace(-radius, radius, points)
    offsets = sorted(itertools.product(axis, repeat=3), key=lambda d: (float(np.linalg.norm(d)), d))
    return [guess + np.array(d) for d in offsets]


def solve(x, y, alpha, sigma_L, sigma_R, guess, cfg=DEFAULTS, radius=None, points=None):
    """Verified parameters near ``guess``.

    The Newton basin of a root is narrow (about 0.02 here) and neighbouring
    roots either fail verification or lie far away, so Newton is restarted
    from a grid over ``guess +- radius`` in order of distance, with steps no
    longer than ``radius``. The first converged root that stays within
    ``2 * radius`` of the guess and passes :func:`verify` is returned.
    """
    radius = cfg.search_radius if radius is None else radius
    points = cfg.search_points if points is None else points
    guess = np.asarray(guess, dtype=float)
    quick = cfg.override(newton_max_iter=cfg.search_max_iter, armijo_max_halvings=cfg.search_max_iter)
    rejected = []
    for start in grid_starts(guess, radius, points):
        try:
            r = newton_solve(x, y, alpha, sigma_L, sigma_R, start, quick, check=False, max_step=radius)
        except GrazslideError:
            continue
        if np.max(np.abs(_coords(r.params) - guess)) > 2.0 * radius:
            continue
        report = verify(r.params, x, y)
        r.verified, r.failed_conditions = report.overall, report.failed()
        if r.verified:
            return r
        rejected.append(r)
    detail = f"; {len(rejected)} spurious roots rejected" if rejected else ""
    raise ConvergenceError(f"no verified root within {radius} of the guess{detail}", last=guess,
                           residual=np.nan)


def multi_start(x, y, alpha, sigma_L, sigma_R, guesses, cfg=DEFAULTS):
    """Newton from several guesses; converged roots sorted verified-first, then by residual."""
    found = []
    for g in guesses:
        try:
            found.append(newton_solve(x, y, alpha, sigma_L, sigma_R, g, cfg))
        except GrazslideError:
            continue
    found.sort(key=lambda r: (not r.verified, r.residual_norm, tuple(_coords(r.params))))
    return found
