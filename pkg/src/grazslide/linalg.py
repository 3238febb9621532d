"""Small dense linear algebra used throughout: 3x3 characteristic polynomials,
closed-form cubic roots and a Pade matrix exponential."""

import numpy as np

from .config import DEFAULTS

# Pade coefficients and the backward-error thresholds theta_m of Higham (2005).
_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
         16380.0, 182.0, 1.0),
}
_THETA = ((3, 1.495585217958292e-2), (5, 2.539398330063230e-1),
          (7, 9.504178996162932e-1), (9, 2.097847961257068e0))
_THETA13 = 5.371920351148152e0


def _pade_uv(A, m):
    c = _PADE[m]
    n = A.shape[0]
    ident = np.eye(n)
    A2 = A @ A
    if m < 13:
        powers = [ident, A2]
        for _ in range(2, (m + 1) // 2):
            powers.append(powers[-1] @ A2)
        U = sum(c[2 * j + 1] * powers[j] for j in range(len(powers)))
        V = sum(c[2 * j] * powers[j] for j in range(len(powers)))
        return A @ U, V
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (c[13] * A6 + c[11] * A4 + c[9] * A2)
             + c[7] * A6 + c[5] * A4 + c[3] * A2 + c[1] * ident)
    V = (A6 @ (c[12] * A6 + c[10] * A4 + c[8] * A2)
         + c[6] * A6 + c[4] * A4 + c[2] * A2 + c[0] * ident)
    return U, V


def matrix_exponential(A, t=1.0):
    """Return ``exp(t*A)`` by scaling and squaring with a Pade approximant.

    The degree is the smallest of 3, 5, 7, 9, 13 whose threshold covers
    ``||tA||_1``; beyond the degree-13 threshold the argument is scaled by
    ``2**-s`` and the result squared ``s`` times.
    """
    A = np.asarray(A, dtype=float) * t
    norm = np.linalg.norm(A, 1)
    for m, theta in _THETA:
        if norm <= theta:
            U, V = _pade_uv(A, m)
            return np.linalg.solve(V - U, V + U)
    s = max(0, int(np.ceil(np.log2(norm / _THETA13)))) if norm > 0 else 0
    U, V = _pade_uv(A / 2.0 ** s, 13)
    F = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        F = F @ F
    return F


def char_coeffs(Q):
    """Trace, second trace and determinant of a 3x3 matrix.

    These are the coefficients of ``lam**3 - tau*lam**2 + sigma*lam - delta``.
    """
    q = np.asarray(Q, dtype=float)
    tau = q[0, 0] + q[1, 1] + q[2, 2]
    sigma = (q[0, 0] * q[1, 1] + q[0, 0] * q[2, 2] + q[1, 1] * q[2, 2]
             - q[0, 1] * q[1, 0] - q[0, 2] * q[2, 0] - q[1, 2] * q[2, 1])
    delta = (q[0, 0] * q[1, 1] * q[2, 2] + q[0, 1] * q[1, 2] * q[2, 0]
             + q[0, 2] * q[1, 0] * q[2, 1] - q[0, 0] * q[1, 2] * q[2, 1]
             - q[0, 1] * q[1, 0] * q[2, 2] - q[0, 2] * q[1, 1] * q[2, 0])
    return float(tau), float(sigma), float(delta)


def cubic_discriminant(tau, sigma, delta):
    """Discriminant of ``lam**3 - tau*lam**2 + sigma*lam - delta``.

    Positive: three distinct real roots. Negative: one real root and a
    complex-conjugate pair.
    """
    p = sigma - tau * tau / 3.0
    q = -2.0 * tau ** 3 / 27.0 + tau * sigma / 3.0 - delta
    return -(4.0 * p ** 3 + 27.0 * q * q)


def _polish(r, tau, sigma, delta, iters=3):
    for _ in range(iters):
        f = ((r - tau) * r + sigma) * r - delta
        df = (3.0 * r - 2.0 * tau) * r + sigma
        if df == 0.0:
            break
        step = f / df
        r -= step
        if abs(step) <= 1e-17 * (1.0 + abs(r)):
            break
    return r


def cubic_roots(tau, sigma, delta, disc_tol=DEFAULTS.cubic_disc_tol):
    """Roots of ``lam**3 - tau*lam**2 + sigma*lam - delta``, largest modulus first.

    Closed form (trigonometric or Cardano) with Newton polishing; when the
    discriminant is within ``disc_tol`` (relative) of zero the companion
    matrix eigenvalues are used instead.
    """
    p = sigma - tau * tau / 3.0
    q = -2.0 * tau ** 3 / 27.0 + tau * sigma / 3.0 - delta
    disc = -(4.0 * p ** 3 + 27.0 * q * q)
    scale = 4.0 * abs(p) ** 3 + 27.0 * q * q
    shift = tau / 3.0

    if scale == 0.0 or abs(disc) <= disc_tol * scale:
        comp = np.array([[tau, -sigma, delta], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        roots = np.linalg.eigvals(comp).astype(complex)
    elif disc > 0:
        m = 2.0 * np.sqrt(-p / 3.0)
        arg = np.clip(3.0 * q / (p * m), -1.0, 1.0)
        phi = np.arccos(arg) / 3.0
        roots = np.array([
            _polish(m * np.cos(phi - 2.0 * np.pi * j / 3.0) + shift, tau, sigma, delta)
            for j in range(3)
        ], dtype=complex)
    else:
        sq = np.sqrt(-disc / 108.0)
        u = np.cbrt(-q / 2.0 + sq)
        v = np.cbrt(-q / 2.0 - sq)
        r = _polish(u + v + shift, tau, sigma, delta)
        # deflate: the other two roots have sum tau - r and product sigma - r*(tau - r)
        s = tau - r
        prod = sigma - r * s
        d = s * s / 4.0 - prod
        re = s / 2.0
        im = np.sqrt(-d) if d < 0 else 0.0
        roots = np.array([r, re + 1j * im, re - 1j * im])
    order = np.argsort(-np.abs(roots), kind="stable")
    return roots[order]


def eigenvalues3(Q, disc_tol=DEFAULTS.cubic_disc_tol):
    """Eigenvalues of a 3x3 matrix via :func:`cubic_roots` on its characteristic polynomial."""
    return cubic_roots(*char_coeffs(Q), disc_tol=disc_tol)


def null_vector(B):
    """Unit vector spanning the (numerical) null space of a rank-deficient matrix."""
    _, _, vh = np.linalg.svd(B)
    v = vh[-1]
    k = int(np.argmax(np.abs(v)))
    return v if v[k] > 0 else -v
