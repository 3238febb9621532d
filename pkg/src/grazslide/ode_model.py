"""A harmonically forced Filippov system with a grazing-sliding bifurcation.

For ``X < 0`` the flow is the linear oscillator

    X' = Y,  Y' = Z,  Z' = -a1 (X + 1) - a2 Y - a3 Z + gamma cos t,

and for ``X > 0`` the field is the constant ``(-1, b1, b2)``. The left flow
is available in closed form, so only sliding motion on ``X = 0`` needs a
numerical integrator.

Points of the section ``Pi = {Y = 0}`` are written ``(X, t, Z)``; ``Gamma``
is the line ``X = Y = 0`` where sliding orbits leave the switching surface.
Times are kept unwrapped so the number of forcing periods is never lost.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .config import DEFAULTS
from .errors import DomainError, EscapeError, SlidingError
from .linalg import matrix_exponential

TWO_PI = 2.0 * np.pi
E1 = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True)
class OdeParams:
    alpha1: float
    alpha2: float
    alpha3: float
    beta1: float
    beta2: float
    gamma: float = None

    def __post_init__(self):
        if self.alpha1 == self.alpha3 and self.alpha2 == 1.0:
            raise DomainError("alpha1 = alpha3 and alpha2 = 1: the forced oscillation has no particular solution")

    @property
    def alpha(self):
        return (self.alpha1, self.alpha2, self.alpha3)

    @property
    def beta(self):
        return (self.beta1, self.beta2)

    def with_gamma(self, gamma):
        return OdeParams(*self.alpha, *self.beta, float(gamma))

    def to_dict(self):
        g = None if self.gamma is None else float(self.gamma)
        return {"alpha": [float(a) for a in self.alpha], "beta": [float(b) for b in self.beta], "gamma": g}

    @classmethod
    def from_dict(cls, d):
        try:
            a, b = d["alpha"], d["beta"]
        except KeyError as exc:
            raise KeyError(f"ODE parameters need 'alpha' and 'beta', missing {exc}") from None
        if len(a) != 3 or len(b) != 2:
            raise ValueError("'alpha' needs three entries and 'beta' two")
        g = d.get("gamma")
        return cls(*(float(v) for v in a), *(float(v) for v in b), None if g is None else float(g))


@dataclass(frozen=True)
class GrazingData:
    gamma_graz: float
    t_graz: float
    X_graz: tuple = (0.0, 0.0, -1.0)
    Z_graz: float = -1.0


@dataclass(frozen=True)
class PoincareState:
    """A point of ``Y = 0``; ``t`` is absolute time, ``phase`` its value mod 2 pi."""

    X: float
    t: float
    Z: float

    @property
    def phase(self):
        return float(np.mod(self.t, TWO_PI))

    @property
    def vector(self):
        return np.array([self.X, 0.0, self.Z])


def system_matrix(p):
    return np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-p.alpha1, -p.alpha2, -p.alpha3]])


def _require_gamma(p):
    if p.gamma is None:
        raise DomainError("gamma is unset; choose it relative to gamma_graz first")
    return p.gamma


def grazing_data(p):
    u, v = p.alpha1 - p.alpha3, p.alpha2 - 1.0
    if u == 0.0 and v == 0.0:
        raise DomainError("degenerate forcing: alpha1 - alpha3 = alpha2 - 1 = 0")
    return GrazingData(float(np.hypot(u, v)), float(np.mod(np.arctan2(v, u), TWO_PI)))


def particular_solution(p, t):
    """The forced periodic orbit ``X_p(t)``; vectorised over ``t``."""
    g = _require_gamma(p)
    u, v = p.alpha1 - p.alpha3, p.alpha2 - 1.0
    cu = np.array([u, v, -u])
    cv = np.array([v, -u, -v])
    t = np.asarray(t, dtype=float)
    scale = g / (u * u + v * v)
    out = scale * (np.multiply.outer(np.cos(t), cu) + np.multiply.outer(np.sin(t), cv))
    return out - E1


def left_flow(p, x0, t0, t):
    """Exact solution of the left half-system through ``x0`` at ``t0``, evaluated at ``t``."""
    h0 = np.asarray(x0, dtype=float) - particular_solution(p, t0)
    return particular_solution(p, t) + matrix_exponential(system_matrix(p), t - t0) @ h0


def sliding_rhs(p, y, z, t, min_denominator=DEFAULTS.sliding_min_denominator):
    """``(Y', Z')`` of the sliding flow on ``X = 0``."""
    g = _require_gamma(p)
    den = y + 1.0
    if abs(den) < min_denominator:
        raise SlidingError(f"sliding vector field singular at Y = {y}")
    return ((p.beta1 * y + z) / den,
            (-p.alpha1 + (p.beta2 - p.alpha2) * y - p.alpha3 * z + g * np.cos(t)) / den)


def sliding_field_3d(p, y, z, t):
    """Filippov convex combination of the two fields at ``(0, y, z)``; its X-component is zero."""
    g = _require_gamma(p)
    left = np.array([y, z, -p.alpha1 - p.alpha2 * y - p.alpha3 * z + g * np.cos(t)])
    right = np.array([-1.0, p.beta1, p.beta2])
    lam = 1.0 / (y + 1.0)  # weight of the left field, from lam * y - (1 - lam) = 0
    return lam * left + (1.0 - lam) * right


def slide(p, y0, z0, t0, steps=DEFAULTS.sliding_steps, min_denominator=DEFAULTS.sliding_min_denominator,
          record=False):
    """Integrate sliding motion from ``Y = y0 > 0`` down to the exit ``Y = 0``.

    ``Y`` is used as the independent variable (it decreases monotonically
    while sliding near grazing), so a fixed number of RK4 steps lands
    exactly on the exit and the result is a smooth function of the start.
    Returns ``(t, Z)`` at exit, plus the sampled path if ``record``.
    """
    g = _require_gamma(p)

    def f(y, s):
        t, z = s
        den = p.beta1 * y + z
        if abs(den) < min_denominator or abs(y + 1.0) < min_denominator:
            raise SlidingError(f"sliding motion stalls at Y = {y:.3e}, Z = {z:.3e}")
        return np.array([(y + 1.0) / den,
                         (-p.alpha1 + (p.beta2 - p.alpha2) * y - p.alpha3 * z + g * np.cos(t)) / den])

    h = -y0 / steps
    s = np.array([t0, z0], dtype=float)
    y = y0
    path = [(s[0], y, s[1])] if record else None
    for _ in range(steps):
        k1 = f(y, s)
        k2 = f(y + 0.5 * h, s + 0.5 * h * k1)
        k3 = f(y + 0.5 * h, s + 0.5 * h * k2)
        k4 = f(y + h, s + h * k3)
        s = s + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        y += h
        if record:
            path.append((s[0], y, s[1]))
    if s[0] < t0:
        raise SlidingError("sliding time ran backwards; the orbit is not in the attracting sliding region")
    return (s[0], s[1], path) if record else (s[0], s[1])


def _polish(fn, a, b, tol):
    """Safeguarded Newton for a root of ``fn`` in ``[a, b]``; ``fn`` returns ``(value, slope)``."""
    fa, _ = fn(a)
    fb, _ = fn(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise ValueError("root not bracketed")
    t = a - fa * (b - a) / (fb - fa)
    for _ in range(100):
        ft, dt = fn(t)
        if ft == 0.0:
            return t
        if np.sign(ft) == np.sign(fa):
            a, fa = t, ft
        else:
            b = t
        step = ft / dt if dt != 0.0 else np.inf
        nxt = t - step
        if not a < nxt < b:
            nxt = 0.5 * (a + b)
        if abs(nxt - t) <= tol * (1.0 + abs(t)) or b - a <= tol * (1.0 + abs(t)):
            return nxt
        t = nxt
    return t


@dataclass
class Loop:
    """One pass near the base orbit, ending at a crossing of ``Pi`` at a maximum of X.

    ``point`` is the (possibly virtual) crossing obtained by following the
    left flow; ``symbol`` is 'R' when it is virtual (X > 0), i.e. the orbit
    actually struck ``X = 0`` first at ``hit``.
    """

    point: PoincareState
    symbol: str
    hit: tuple = None  # (t, Y, Z) on X = 0 before sliding


@dataclass
class Excursion:
    start: PoincareState
    end: PoincareState
    loops: list = field(default_factory=list)

    @property
    def count(self):
        return len(self.loops)

    @property
    def symbols(self):
        return "".join(lp.symbol for lp in self.loops)


@lru_cache(maxsize=32)
def _propagators(alpha, n):
    A = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-alpha[0], -alpha[1], -alpha[2]]])
    step = matrix_exponential(A, TWO_PI / n)
    table = np.empty((n + 1, 3, 3))
    table[0] = np.eye(3)
    for k in range(1, n + 1):
        table[k] = step @ table[k - 1]
    table.flags.writeable = False
    return table, matrix_exponential(A, TWO_PI)


class LeftFlow:
    """Closed-form left flow with a precomputed propagator table for event bracketing.

    The table holds ``e^{kHA}`` for one forcing period; it is only used to
    bracket events, whose times and states are then computed exactly.
    """

    def __init__(self, p, cfg=DEFAULTS):
        _require_gamma(p)
        self.p = p
        self.cfg = cfg
        self.A = system_matrix(p)
        n = cfg.grid_per_period
        self.H = TWO_PI / n
        self.table, self.period = _propagators(tuple(float(a) for a in p.alpha), n)
        self.offsets = self.H * np.arange(n + 1)
        lam, V = np.linalg.eig(self.A)
        self._eig = (lam, V, np.linalg.inv(V)) if np.linalg.cond(V) < 1e6 else None

    def homogeneous(self, x, t):
        return np.asarray(x, dtype=float) - particular_solution(self.p, t)

    def state(self, h_ref, t_ref, t):
        """State at ``t`` given the homogeneous part ``h_ref`` at ``t_ref``."""
        if self._eig is None:
            return particular_solution(self.p, t) + matrix_exponential(self.A, t - t_ref) @ h_ref
        lam, V, Vinv = self._eig
        return particular_solution(self.p, t) + (V @ (np.exp(lam * (t - t_ref)) * (Vinv @ h_ref))).real

    def chunk(self, h_ref, t_ref):
        """States on the grid ``t_ref + k H``, ``k = 0..n`` (one forcing period, endpoints shared)."""
        ts = t_ref + self.offsets
        return ts, particular_solution(self.p, ts) + self.table @ h_ref


def excursion(p, s, cfg=DEFAULTS, expected_loops=1, flow=None):
    """Follow the orbit from a point of Gamma until it next leaves sliding.

    Maxima of X (``Y`` changing from positive to negative) are counted as
    loops. A maximum with ``X > 0`` is virtual: the orbit hit ``X = 0``
    on the way up, slid, and re-entered ``X < 0`` on Gamma. Raises
    :class:`EscapeError` if no hit occurs within
    ``2 pi (escape_base_periods + 4 expected_loops)``.
    """
    flow = flow or LeftFlow(p, cfg)
    t0 = float(s.t)
    x0 = np.array([s.X, 0.0, s.Z])
    if not (np.all(np.isfinite(x0)) and abs(t0) < 1e8):
        raise EscapeError(f"start state (t = {t0}, X = {s.X}, Z = {s.Z}) is not a usable point of Pi")
    t_ref, h_ref = t0, flow.homogeneous(x0, t0)
    t_max = t0 + TWO_PI * (cfg.escape_base_periods + 4 * expected_loops)
    tol = cfg.root_tol * 1e-2
    loops = []
    first = True
    prev = None

    def y_of(t):
        st = flow.state(h_ref, t_ref, t)
        return st[1], st[2]

    def x_of(t):
        st = flow.state(h_ref, t_ref, t)
        return st[0], st[1]

    while t_ref < t_max:
        ts, S = flow.chunk(h_ref, t_ref)
        Y = S[:, 1]
        idx = np.nonzero((Y[:-1] > 0.0) & (Y[1:] <= 0.0))[0]
        for i in idx:
            if first and i == 0:
                continue  # the starting point itself sits at a maximum
            tm = _polish(y_of, ts[i], ts[i + 1], tol)
            st = flow.state(h_ref, t_ref, tm)
            if st[0] <= 0.0:
                loops.append(Loop(PoincareState(st[0], tm, st[2]), "L"))
                continue
            below = np.nonzero(S[:i + 1, 0] < 0.0)[0]
            if len(below):
                lo = ts[below[-1]]
            elif prev is not None and np.any(prev[1][:, 0] < 0.0):
                lo = prev[0][np.nonzero(prev[1][:, 0] < 0.0)[0][-1]]
            else:
                raise EscapeError("the orbit never enters X < 0 before its first maximum")
            th = _polish(x_of, lo, tm, tol)
            hit = flow.state(h_ref, t_ref, th)
            if hit[1] <= 0.0:
                raise SlidingError(f"hit X = 0 with Y = {hit[1]:.3e} <= 0; no sliding")
            te, ze = slide(p, hit[1], hit[2], th, cfg.sliding_steps, cfg.sliding_min_denominator)
            loops.append(Loop(PoincareState(st[0], tm, st[2]), "R", (th, hit[1], hit[2])))
            return Excursion(s, PoincareState(0.0, te, ze), loops)
        first = False
        prev = (ts, S)
        h_ref = flow.period @ h_ref
        t_ref = t_ref + TWO_PI
    raise EscapeError(f"no return to X = 0 within {t_max - t0:.1f} time units "
                      f"({len(loops)} loops completed)")


def gamma_return(p, s, cfg=DEFAULTS, expected_loops=1, flow=None):
    """Return map on Gamma: ``(next state, number of loops)``."""
    ex = excursion(p, s, cfg, expected_loops, flow)
    return ex.end, ex.count


def trajectory(p, s, segments=1, cfg=DEFAULTS):
    """Dense samples ``(t, X, Y, Z, regime)`` along ``segments`` Gamma-to-Gamma excursions."""
    flow = LeftFlow(p, cfg)
    rows = []
    for _ in range(segments):
        ex = excursion(p, s, cfg, flow=flow)
        hit = ex.loops[-1].hit
        x0 = np.array([s.X, 0.0, s.Z])
        h0 = flow.homogeneous(x0, s.t)
        n = int(np.ceil((hit[0] - s.t) / flow.H))
        for t in np.linspace(s.t, hit[0], max(n, 1) + 1):
            x = flow.state(h0, s.t, t)
            rows.append((float(t), float(x[0]), float(x[1]), float(x[2]), "left"))
        _, _, path = slide(p, hit[1], hit[2], hit[0], cfg.sliding_steps, cfg.sliding_min_denominator,
                           record=True)
        rows.extend((float(t), 0.0, float(y), float(z), "sliding") for t, y, z in path[1:])
        s = ex.end
    return rows


@dataclass
class LeadingOrder:
    A_L: np.ndarray
    A_R: np.ndarray
    b: np.ndarray
    det_O_L: float
    rho_b: float
    grazing: GrazingData

    @property
    def conjugate_to_normal_form(self):
        return self.det_O_L != 0.0 and self.rho_b != 0.0


def discontinuity_matrix(p):
    return np.array([[0.0, 0.0, 0.0], [p.beta1 + 1.0, 1.0, 0.0], [p.beta2, 0.0, 1.0]])


def observability_matrix(A_L):
    return np.array([A_L[0] @ A_L, A_L[0], E1])


def adjugate(M):
    """Adjugate of a 3x3 matrix by cofactors (valid for singular ``M``)."""
    C = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            minor = np.delete(np.delete(M, i, axis=0), j, axis=1)
            C[i, j] = (-1) ** (i + j) * (minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    return C.T


def leading_order_normal_form(p):
    """Affine approximation of the return map near grazing, in ``x = (X, t - t_graz, Z + 1)``.

    ``A_L = e^{2 pi A}``, ``A_R = e^{2 pi A} D`` with ``D`` the linear part of
    the discontinuity map, and ``b`` multiplies ``mu = gamma - gamma_graz``.
    """
    gd = grazing_data(p)
    E = matrix_exponential(system_matrix(p), TWO_PI)
    A_R = E @ discontinuity_matrix(p)
    b = (np.eye(3) - E) @ np.array([1.0, 0.0, -1.0]) / gd.gamma_graz
    det_O = float(np.linalg.det(observability_matrix(E)))
    rho_b = float(adjugate(np.eye(3) - E)[0] @ b)
    return LeadingOrder(E, A_R, b, det_O, rho_b, gd)


def _shifted(p, state):
    gd = grazing_data(p)
    return np.array([state.X, state.t - gd.t_graz, state.Z - gd.Z_graz]), gd


def affine_global_map(p, state):
    """Leading-order global map ``P_g`` on ``Pi`` (one loop of the left flow)."""
    x, gd = _shifted(p, state)
    lo = leading_order_normal_form(p)
    y = lo.A_L @ x + lo.b * (_require_gamma(p) - gd.gamma_graz)
    return PoincareState(float(y[0]), float(y[1] + gd.t_graz + TWO_PI), float(y[2] + gd.Z_graz))


def affine_discontinuity_map(p, state):
    """Leading-order discontinuity map ``P_d``: identity for ``X <= 0``, linear correction for ``X > 0``."""
    if state.X <= 0.0:
        return state
    x, gd = _shifted(p, state)
    y = discontinuity_matrix(p) @ x
    return PoincareState(float(y[0]), float(y[1] + gd.t_graz), float(y[2] + gd.Z_graz))


def to_section(p, x, periods=0):
    """Map normal-form coordinates ``x = (X, t - t_graz, Z + 1)`` to a point of ``Pi``."""
    gd = grazing_data(p)
    return PoincareState(float(x[0]), float(x[1] + gd.t_graz + TWO_PI * periods), float(x[2] + gd.Z_graz))


def from_section(p, state):
    """Inverse of :func:`to_section`, with ``t - t_graz`` wrapped to ``[-pi, pi)``."""
    gd = grazing_data(p)
    dt = np.mod(state.t - gd.t_graz + np.pi, TWO_PI) - np.pi
    return np.array([state.X, dt, state.Z - gd.Z_graz])
