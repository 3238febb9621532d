"""Piecewise-linear continuous maps in three dimensions.

``f(x) = A_L x + b mu`` for ``x[0] <= 0`` and ``A_R x + b mu`` for ``x[0] >= 0``.
The border-collision normal form puts ``A_L`` and ``A_R`` in companion form
with first columns ``(tau, -sigma, delta)`` and ``b = e1``.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .config import DEFAULTS
from .errors import SingularCycleError
from .linalg import char_coeffs, cubic_roots
from .words import as_word

PARAM_KEYS = ("tau_L", "sigma_L", "delta_L", "tau_R", "sigma_R", "delta_R", "mu")


@dataclass(frozen=True)
class NormalFormParams:
    tau_L: float
    sigma_L: float
    delta_L: float
    tau_R: float
    sigma_R: float
    delta_R: float
    mu: float = 1.0

    def to_dict(self):
        return {k: float(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d):
        missing = [k for k in PARAM_KEYS if k not in d]
        if missing:
            raise KeyError(f"normal-form parameters missing keys: {missing}")
        return cls(**{k: float(d[k]) for k in PARAM_KEYS})

    def replace(self, **changes):
        d = asdict(self)
        d.update(changes)
        return NormalFormParams(**d)


@dataclass(frozen=True)
class PwlMap:
    A_L: np.ndarray
    A_R: np.ndarray
    b: np.ndarray
    mu: float

    def matrix(self, symbol):
        return self.A_L if symbol == "L" else self.A_R

    def branch(self, symbol, x):
        """Forced application of one branch, regardless of which side ``x`` is on."""
        return self.matrix(symbol) @ x + self.b * self.mu

    def __call__(self, x):
        return apply(self, x)


def companion(tau, sigma, delta):
    return np.array([[tau, 1.0, 0.0], [-sigma, 0.0, 1.0], [delta, 0.0, 0.0]])


def build_map(p):
    return PwlMap(
        A_L=companion(p.tau_L, p.sigma_L, p.delta_L),
        A_R=companion(p.tau_R, p.sigma_R, p.delta_R),
        b=np.array([1.0, 0.0, 0.0]),
        mu=float(p.mu),
    )


def apply(m, x):
    x = np.asarray(x, dtype=float)
    return m.branch("L" if x[0] < 0 else "R", x)


def side(x, tol=DEFAULTS.sigma_tol):
    """'L', 'R', or 'S' (on the switching manifold within tolerance)."""
    x = np.asarray(x, dtype=float)
    if abs(x[0]) <= tol * (1.0 + np.linalg.norm(x)):
        return "S"
    return "L" if x[0] < 0 else "R"


def word_matrices(m, w):
    """``(M_X, P_X)`` with ``f_X(x) = M_X x + P_X b mu`` for the composition along ``w``."""
    w = as_word(w)
    if len(w) < 1:
        raise ValueError("word_matrices needs a non-empty word")
    M = np.eye(3)
    P = np.zeros((3, 3))
    for s in w:
        A = m.matrix(s)
        M = A @ M
        P = A @ P + np.eye(3)
    return M, P


def iterate_word(m, w, x):
    """Forced iteration along ``w``; returns the ``len(w) + 1`` visited points."""
    pts = [np.asarray(x, dtype=float)]
    for s in as_word(w):
        pts.append(m.branch(s, pts[-1]))
    return np.array(pts)


@dataclass
class Cycle:
    word: str
    points: np.ndarray
    sides: list
    admissible: bool
    on_boundary: list
    eigenvalues: np.ndarray
    residual: float
    cond: float
    mismatched: list = field(default_factory=list)

    @property
    def moduli(self):
        return np.abs(self.eigenvalues)

    @property
    def stability(self):
        return classify_stability(self)


def solve_cycle(m, w, sigma_tol=DEFAULTS.sigma_tol, cond_max=DEFAULTS.cond_max):
    """Solve for the X-cycle of word ``w``.

    Raises :class:`SingularCycleError` when ``I - M_X`` has condition number
    above ``cond_max``.
    """
    w = as_word(w)
    M, P = word_matrices(m, w)
    B = np.eye(3) - M
    cond = np.linalg.cond(B)
    if not np.isfinite(cond) or cond > cond_max:
        raise SingularCycleError(str(w), float(np.linalg.det(B)), float(cond))
    x0 = np.linalg.solve(B, P @ m.b * m.mu)
    pts = iterate_word(m, w, x0)
    points, closing = pts[:-1], pts[-1]
    scale = 1.0 + np.max(np.abs(points))
    residual = float(np.max(np.abs(closing - points[0])) / scale)

    sides = [side(x, sigma_tol) for x in points]
    on_boundary = [i for i, s in enumerate(sides) if s == "S"]
    mismatched = [i for i, s in enumerate(sides) if s != "S" and s != w[i]]
    return Cycle(
        word=str(w),
        points=points,
        sides=sides,
        admissible=not mismatched,
        on_boundary=on_boundary,
        eigenvalues=cubic_roots(*char_coeffs(M)),
        residual=residual,
        cond=float(cond),
        mismatched=mismatched,
    )


def classify_stability(c):
    """'stable', 'saddle', 'unstable', or 'inconclusive' when a point lies on Sigma."""
    if c.on_boundary:
        return "inconclusive"
    return classify_moduli(np.abs(c.eigenvalues))


def classify_moduli(moduli):
    moduli = np.asarray(moduli)
    if np.all(moduli < 1.0):
        return "stable"
    if np.all(moduli > 1.0):
        return "unstable"
    return "saddle"


def normal_form_from_matrices(A_L, A_R, mu=1.0):
    """Read (tau, sigma, delta) off a pair of matrices; the conjugate normal form."""
    tL, sL, dL = char_coeffs(A_L)
    tR, sR, dR = char_coeffs(A_R)
    return NormalFormParams(tL, sL, dL, tR, sR, dR, mu)
