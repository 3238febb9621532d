"""Choosing ODE coefficients so the leading-order return map has prescribed spectra.

``A_L = e^{2 pi A}`` fixes the eigenvalues of ``A`` (hence the alphas) up to
the branch of the logarithm; ``A_R`` then depends linearly on the betas
through its characteristic polynomial.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GenericityError, NotFittableError
from .linalg import char_coeffs, cubic_roots, matrix_exponential
from .normal_form import build_map
from .ode_model import TWO_PI, OdeParams, leading_order_normal_form, system_matrix


@dataclass(frozen=True)
class EigTargets:
    lambdaL1: float
    lambdaL23: complex  # the member of the pair with positive imaginary part
    lambdaR1: float
    lambdaR2: float

    def __post_init__(self):
        if not self.lambdaL1 > 0.0:
            raise DomainError(f"lambda_1^L must be positive, got {self.lambdaL1}")
        if not complex(self.lambdaL23).imag > 0.0:
            raise DomainError(f"lambda_2,3^L needs a positive imaginary part, got {self.lambdaL23}")

    def to_dict(self):
        z = complex(self.lambdaL23)
        return {"lambdaL1": self.lambdaL1, "lambdaL23": [z.real, z.imag],
                "lambdaR1": self.lambdaR1, "lambdaR2": self.lambdaR2}


def nus_from_eigs(t):
    """Eigenvalues of ``A``; the angle of the complex pair is taken in (0, pi)."""
    z = complex(t.lambdaL23)
    nu1 = np.log(t.lambdaL1) / TWO_PI
    nu2 = complex(np.log(abs(z) ** 2) / (2.0 * TWO_PI), np.arctan2(z.imag, z.real) / TWO_PI)
    return nu1, nu2, nu2.conjugate()


def alphas_from_eigs(t):
    nu1, nu2, nu3 = nus_from_eigs(t)
    a1 = -nu1 * nu2 * nu3
    a2 = nu1 * nu2 + nu1 * nu3 + nu2 * nu3
    a3 = -(nu1 + nu2 + nu3)
    return tuple(float(complex(a).real) for a in (a1, a2, a3))


def beta_denominator(E):
    a = lambda i, j: E[i - 1, j - 1]  # noqa: E731
    return a(1, 2) ** 2 * a(2, 3) - a(1, 3) ** 2 * a(3, 2) + a(1, 2) * a(1, 3) * (a(3, 3) - a(2, 2))


def betas_from_eigs(t, alphas, rel_tol=1e-12):
    """Closed-form betas making the nonzero eigenvalues of ``A_R`` equal the targets."""
    E = matrix_exponential(system_matrix(OdeParams(*alphas, 0.0, 0.0)), TWO_PI)
    a = lambda i, j: E[i - 1, j - 1]  # noqa: E731
    den = beta_denominator(E)
    scale = max(1.0, np.max(np.abs(E)) ** 3)
    if abs(den) < rel_tol * scale:
        raise GenericityError(f"beta equations are singular (denominator {den:.3e})")
    s = t.lambdaR1 + t.lambdaR2
    q = t.lambdaR1 * t.lambdaR2
    b1 = -1.0 + (a(1, 2) * a(2, 3) * (s - a(2, 2) - a(3, 3))
                 + a(1, 3) * (q - a(2, 2) * s + a(2, 3) * a(3, 2) + a(2, 2) ** 2)) / den
    b2 = -(a(1, 2) * (q - a(3, 3) * s + a(2, 3) * a(3, 2) + a(3, 3) ** 2)
           + a(1, 3) * a(3, 2) * (s - a(2, 2) - a(3, 3))) / den
    return float(b1), float(b2)


def targets_from_normal_form(params):
    """Read the eigenvalue targets off a normal form; raises if ``A_L`` has no complex pair."""
    m = build_map(params)
    tL, sL, dL = char_coeffs(m.A_L)
    eigL = cubic_roots(tL, sL, dL)
    complex_ = [z for z in eigL if abs(z.imag) > 0.0]
    real = [z.real for z in eigL if z.imag == 0.0]
    if len(complex_) != 2:
        raise NotFittableError(f"A_L has an all-real spectrum {np.real(eigL)}; the fit needs a complex pair")
    if not real or real[0] <= 0.0:
        raise NotFittableError(f"the real eigenvalue of A_L must be positive to be e^(2 pi nu), got {real}")
    tR, sR, dR = char_coeffs(m.A_R)
    if abs(dR) > 1e-12 * (1.0 + abs(tR) + abs(sR)):
        raise NotFittableError(f"A_R must be singular (delta_R = 0), got delta_R = {dR}")
    disc = tR * tR - 4.0 * sR
    if disc < 0.0:
        raise NotFittableError("A_R has a complex pair; the fit needs real eigenvalues")
    r = np.sqrt(disc)
    pair = complex_[0] if complex_[0].imag > 0 else complex_[1]
    return EigTargets(float(real[0]), complex(pair), (tR + r) / 2.0, (tR - r) / 2.0)


@dataclass
class FitReport:
    ode: OdeParams
    targets: EigTargets
    achieved_L: np.ndarray
    achieved_R: np.ndarray

    @property
    def residual_L(self):
        want = np.array([self.targets.lambdaL1, self.targets.lambdaL23, np.conj(self.targets.lambdaL23)])
        return float(_match(want, self.achieved_L))

    @property
    def residual_R(self):
        want = np.array([self.targets.lambdaR1, self.targets.lambdaR2, 0.0])
        return float(_match(want, self.achieved_R))

    def to_dict(self):
        c = lambda z: [float(np.real(z)), float(np.imag(z))]  # noqa: E731
        return {
            "ode": self.ode.to_dict(),
            "targets": self.targets.to_dict(),
            "achieved": {"A_L": [c(z) for z in self.achieved_L], "A_R": [c(z) for z in self.achieved_R]},
            "residuals": {"A_L": self.residual_L, "A_R": self.residual_R},
        }


def _match(want, got):
    """Largest distance between two unordered triples, by greedy nearest matching."""
    got = list(got)
    worst = 0.0
    for w in want:
        k = int(np.argmin([abs(w - g) for g in got]))
        worst = max(worst, abs(w - got.pop(k)))
    return worst


def fit_pipeline(params):
    """ODE coefficients (gamma unset) reproducing the spectra of a normal form's ``A_L`` and ``A_R``."""
    targets = targets_from_normal_form(params)
    alphas = alphas_from_eigs(targets)
    betas = betas_from_eigs(targets, alphas)
    ode = OdeParams(*alphas, *betas)
    lo = leading_order_normal_form(ode)
    return FitReport(ode, targets, cubic_roots(*char_coeffs(lo.A_L)), cubic_roots(*char_coeffs(lo.A_R)))
