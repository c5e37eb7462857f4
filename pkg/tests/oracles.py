"""Independent reference computations used by the tests.

Nothing here calls into the solver or curvature code it checks. Linear algebra
runs in mpmath at high precision and curvature references come from
closed-form expressions.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np


def pwls_coefficients(B, w, y, root, lam, dps: int = 60) -> np.ndarray:
    """Solve ``(B' W B + lam Omega) beta = B' W y`` in extended precision.

    ``Omega = root' root`` is formed inside the extended-precision context.
    Rounding ``Omega`` to doubles first would break its exact null space of
    linear functions, and the solution is sensitive to that at large ``lam``.
    """
    with mpmath.workdps(dps):
        Bm = mpmath.matrix(B.tolist())
        Wm = mpmath.diag([mpmath.mpf(float(v)) for v in w])
        Rm = mpmath.matrix(root.tolist())
        Om = Rm.T * Rm
        ym = mpmath.matrix([float(v) for v in y])
        lhs = Bm.T * Wm * Bm + mpmath.mpf(float(lam)) * Om
        rhs = Bm.T * Wm * ym
        beta = mpmath.lu_solve(lhs, rhs)
        return np.array([float(beta[i]) for i in range(beta.rows)])


def lorentz_curvature_at_zero(sigma: float) -> float:
    """Curvature at 0 of ``g(x) = 1 / (1 + (x/sigma)^2)``.

    ``g'(0) = 0`` and ``g''(0) = -2/sigma^2``, so ``kappa(0) = 2/sigma^2``.
    """
    return 2.0 / sigma**2


def population_threshold(values) -> float:
    """Mean plus population standard deviation, by direct summation."""
    vals = [float(v) for v in values]
    mean = math.fsum(vals) / len(vals)
    var = math.fsum((v - mean) ** 2 for v in vals) / len(vals)
    return mean + math.sqrt(var)


def tweedie_unit_deviance(y: float, mu: float, p: float) -> float:
    """Tweedie unit deviance with mpmath, including the y = 0 limit."""
    with mpmath.workdps(40):
        y, mu, p = mpmath.mpf(y), mpmath.mpf(mu), mpmath.mpf(p)
        first = 0 if y == 0 else y ** (2 - p) / ((1 - p) * (2 - p))
        d = 2 * (first - y * mu ** (1 - p) / (1 - p) + mu ** (2 - p) / (2 - p))
        return float(d)


def gauss_legendre_penalty(second_derivative, knots, order: int = 8) -> float:
    """Integral of the squared second derivative by a high-order rule per interval."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        total += half * float(np.sum(weights * second_derivative(mid + half * nodes) ** 2))
    return total


def lam_from_bits(u: float, lo: float = -4.0, hi: float = 2.0) -> float:
    return 10.0 ** (lo + (hi - lo) * u)
