"""Cubic B-spline basis with knots at the sample positions.

The basis has ``len(knots) + 2`` functions built on a clamped knot vector.
Outside ``[knots[0], knots[-1]]`` every basis function is continued linearly,
so second derivatives vanish there and finite differences near the ends of the
transect stay well defined.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline

DEGREE = 3

# 3-point Gauss-Legendre nodes/weights on [-1, 1]; exact for the quadratic
# products of cubic-spline second derivatives.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(3)


@dataclass(frozen=True)
class BasisSpec:
    """Cubic B-spline basis over strictly increasing interior knots."""

    knots: np.ndarray
    _splines: tuple = field(repr=False, compare=False)

    @property
    def dimension(self) -> int:
        return len(self.knots) + DEGREE - 1

    @property
    def lower(self) -> float:
        return float(self.knots[0])

    @property
    def upper(self) -> float:
        return float(self.knots[-1])


def build_basis(knots) -> BasisSpec:
    """Build the cubic B-spline basis with one knot per unique position.

    Parameters
    ----------
    knots : array_like
        Strictly increasing knot positions, at least two.

    Returns
    -------
    BasisSpec
    """
    knots = np.asarray(knots, dtype=float)
    if knots.ndim != 1 or len(knots) < 2:
        raise ValueError("at least 2 knots are required")
    if not np.all(np.isfinite(knots)):
        raise ValueError("knots must be finite")
    if np.any(np.diff(knots) <= 0):
        raise ValueError("knots must be strictly increasing (duplicate knots found)")
    full = np.concatenate(
        [np.repeat(knots[0], DEGREE), knots, np.repeat(knots[-1], DEGREE)]
    )
    k = len(knots) + DEGREE - 1
    base = BSpline(full, np.eye(k), DEGREE)
    splines = (base, base.derivative(1), base.derivative(2))
    knots = knots.copy()
    knots.setflags(write=False)
    return BasisSpec(knots=knots, _splines=splines)


def design_matrix(spec: BasisSpec, x, deriv_order: int = 0) -> np.ndarray:
    """Evaluate all basis functions (or a derivative) at each point of ``x``.

    Returns an array of shape ``(len(x), K)``. Points outside the knot range
    use the linear continuation of each basis function.
    """
    if deriv_order not in (0, 1, 2):
        raise ValueError("deriv_order must be 0, 1 or 2")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = spec._splines[deriv_order](x)
    ends = (spec.lower, spec.upper)
    for i, mask in enumerate((x < spec.lower, x > spec.upper)):
        if not mask.any():
            continue
        if deriv_order == 2:
            out[mask] = 0.0
            continue
        slope = spec._splines[1](ends[i])
        if deriv_order == 1:
            out[mask] = slope
        else:
            out[mask] = spec._splines[0](ends[i]) + np.outer(x[mask] - ends[i], slope)
    return out


def eval_basis(spec: BasisSpec, x: float, deriv_order: int = 0) -> np.ndarray:
    """Vector of the K basis values (or derivatives) at a single point."""
    return design_matrix(spec, [x], deriv_order)[0]


def penalty_root(spec: BasisSpec) -> np.ndarray:
    """Matrix ``R`` with ``R.T @ R`` equal to the penalty matrix.

    Rows are second derivatives at the Gauss nodes scaled by the square root
    of the quadrature weights, so ``||R @ beta||**2`` gives the roughness of a
    spline without forming the quadratic form.
    """
    a, b = spec.knots[:-1], spec.knots[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return np.sqrt(weights)[:, None] * design_matrix(spec, nodes, 2)


def penalty_matrix(spec: BasisSpec) -> np.ndarray:
    """Gram matrix of basis second derivatives integrated over the knot range."""
    root = penalty_root(spec)
    omega = root.T @ root
    return 0.5 * (omega + omega.T)
