"""Curvature of shifted and scaled log-ratios of two fitted curves.

For fitted response curves ``f1`` and ``f2`` the log-ratio
``g = log f1 - log f2`` is rescaled to ``c (g - min g)`` with
``c = 1 / (max g - min g)``, and its curvature

    kappa = |c g''| / (1 + (c g')^2)^(3/2)

is thresholded at mean + standard deviation over the evaluation grid. The
exceedance windows give candidate zones and the c-value, the mean squared
peak excess over those windows, scores the pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .gam import SmoothFit
from .spline import design_matrix

DEFAULT_POINTS = 3000
DEFAULT_EPSILON = 1e-3
FLAT_KAPPA = 1e-12


@dataclass(frozen=True)
class EvaluationGrid:
    """Equispaced points over [lower, upper] plus the finite-difference step."""

    size: int = DEFAULT_POINTS
    epsilon: float = DEFAULT_EPSILON
    lower: float = 0.0
    upper: float = 1.0

    def __post_init__(self):
        if self.size < 100:
            raise ValueError("grid needs at least 100 points")
        if not 0 < self.epsilon < 0.5 * (self.upper - self.lower):
            raise ValueError("finite-difference step must be positive and small")
        if not self.upper > self.lower:
            raise ValueError("grid upper bound must exceed lower bound")

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.lower, self.upper, self.size)


@dataclass(frozen=True)
class Derivatives:
    """Response-scale values and derivatives of one curve on a grid.

    ``rel1 = f'/f`` and ``rel2 = f''/f`` are kept separately because the
    log-ratio derivatives only need those ratios.
    """

    x: np.ndarray
    log_value: np.ndarray
    log_offset: float
    rel1: np.ndarray
    rel2: np.ndarray

    @property
    def value(self) -> np.ndarray:
        return np.exp(self.log_value + self.log_offset)

    @property
    def first(self) -> np.ndarray:
        return self.rel1 * self.value

    @property
    def second(self) -> np.ndarray:
        return self.rel2 * self.value


def _as_log_curve(curve) -> tuple[Callable, float]:
    if isinstance(curve, SmoothFit):
        return curve.spline_eta, curve.offset
    return curve, 0.0


def numeric_derivatives(curve, grid: EvaluationGrid, epsilon: float | None = None) -> Derivatives:
    """Central finite differences of a response curve ``f = exp(eta)``.

    ``curve`` is a :class:`SmoothFit` or a callable returning ``log f``. The
    usual stencils ``(f(x+e) - f(x-e)) / 2e`` and
    ``(f(x+e) - 2 f(x) + f(x-e)) / e^2`` are divided by ``f(x)`` and written
    through ``expm1`` of log differences, which leaves them unchanged in value
    but immune to the magnitude of ``f``.
    """
    eps = grid.epsilon if epsilon is None else float(epsilon)
    if eps <= 0:
        raise ValueError("finite-difference step must be positive")
    log_f, offset = _as_log_curve(curve)
    x = grid.points
    centre = np.asarray(log_f(x), dtype=float)
    up = np.expm1(np.asarray(log_f(x + eps), dtype=float) - centre)
    down = np.expm1(np.asarray(log_f(x - eps), dtype=float) - centre)
    rel1 = (up - down) / (2.0 * eps)
    rel2 = (up + down) / eps**2
    return Derivatives(x, centre, offset, rel1, rel2)


def analytic_derivatives(fit: SmoothFit, grid: EvaluationGrid) -> Derivatives:
    """Exact spline derivatives via ``f' = eta' f`` and ``f'' = (eta'' + eta'^2) f``."""
    x = grid.points
    eta = design_matrix(fit.basis, x, 0) @ fit.coefficients
    d1 = design_matrix(fit.basis, x, 1) @ fit.coefficients
    d2 = design_matrix(fit.basis, x, 2) @ fit.coefficients
    return Derivatives(x, eta, fit.offset, d1, d2 + d1**2)


@dataclass(frozen=True)
class LogRatioCurve:
    pair: tuple[str, str]
    x: np.ndarray
    g: np.ndarray
    shift: float
    scale: float
    g1: np.ndarray
    g2: np.ndarray

    @property
    def scaled(self) -> np.ndarray:
        return self.scale * (self.g - self.shift)


def log_ratio_from_derivatives(d1: Derivatives, d2: Derivatives, pair=("", "")) -> LogRatioCurve:
    spline_part = d1.log_value - d2.log_value
    g = spline_part + (d1.log_offset - d2.log_offset)
    # the range comes from the offset-free part so proportional rescaling
    # cannot perturb the scaling constant by rounding
    spread = float(np.max(spline_part) - np.min(spline_part))
    scale = 1.0 / spread if spread > 0 else 1.0
    g1 = d1.rel1 - d2.rel1
    g2 = (d1.rel2 - d1.rel1**2) - (d2.rel2 - d2.rel1**2)
    return LogRatioCurve(tuple(pair), d1.x, g, float(np.min(g)), scale, g1, g2)


def log_ratio_curve(fit1: SmoothFit, fit2: SmoothFit, grid: EvaluationGrid) -> LogRatioCurve:
    """Log-ratio of two fits on the grid using finite-difference derivatives."""
    return log_ratio_from_derivatives(
        numeric_derivatives(fit1, grid),
        numeric_derivatives(fit2, grid),
        (fit1.element, fit2.element),
    )


def curvature(curve: LogRatioCurve) -> np.ndarray:
    c = curve.scale
    return np.abs(c * curve.g2) / (1.0 + (c * curve.g1) ** 2) ** 1.5


def threshold(kappa) -> float:
    """Mean plus population standard deviation of the curvature values."""
    kappa = np.asarray(kappa, dtype=float)
    if kappa.size == 0:
        raise ValueError("empty curvature vector")
    mean = np.mean(kappa)
    return float(mean + np.sqrt(np.mean((kappa - mean) ** 2)))


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    padded = np.concatenate([[False], mask, [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return [(int(s), int(e) - 1) for s, e in zip(edges[::2], edges[1::2])]


def _crossing(x, excess, i, j) -> float:
    # linear interpolation of the zero of excess between grid points i and j
    if excess[i] == 0.0:
        return float(x[i])
    t = excess[i] / (excess[i] - excess[j])
    return float(x[i] + t * (x[j] - x[i]))


def exceedance_windows(kappa, tau: float, x) -> list[tuple[int, int, float, float]]:
    """Index runs with ``kappa >= tau`` and their boundary positions.

    Each entry is ``(first_index, last_index, start, end)``. Runs whose
    excess is zero everywhere (bare touches of the threshold) are dropped.
    """
    kappa = np.asarray(kappa, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.ptp(kappa) <= FLAT_KAPPA * max(1.0, abs(float(np.mean(kappa)))):
        return []
    excess = kappa - tau
    last = len(kappa) - 1
    out = []
    for i, j in _runs(excess >= 0):
        if not np.any(excess[i : j + 1] > 0):
            continue
        start = float(x[0]) if i == 0 else _crossing(x, excess, i, i - 1)
        end = float(x[last]) if j == last else _crossing(x, excess, j, j + 1)
        out.append((i, j, start, end))
    return out


def crossing_set(kappa, tau: float, x) -> list[float]:
    """Ordered threshold crossings, with the end points added when above."""
    flat = []
    for _, _, start, end in exceedance_windows(kappa, tau, x):
        flat.extend((start, end))
    return flat


def c_value(kappa, tau: float, x) -> float:
    """Mean over exceedance windows of the squared peak excess."""
    kappa = np.asarray(kappa, dtype=float)
    windows = exceedance_windows(kappa, tau, x)
    if not windows:
        return 0.0
    peaks = [np.max(kappa[i : j + 1] - tau) ** 2 for i, j, _, _ in windows]
    return float(np.mean(peaks))


@dataclass(frozen=True)
class CurvatureProfile:
    pair: tuple[str, str]
    x: np.ndarray
    kappa: np.ndarray
    threshold: float
    crossings: tuple[float, ...]
    intervals: tuple[tuple[float, float], ...]
    peak_excess: tuple[float, ...]
    c_value: float

    @property
    def above(self) -> np.ndarray:
        mask = np.zeros(len(self.x), dtype=bool)
        for start, end in self.intervals:
            mask |= (self.x >= start) & (self.x <= end)
        return mask


def curvature_profile(curve: LogRatioCurve) -> CurvatureProfile:
    kappa = curvature(curve)
    tau = threshold(kappa)
    windows = exceedance_windows(kappa, tau, curve.x)
    peaks = tuple(float(np.max(kappa[i : j + 1] - tau)) for i, j, _, _ in windows)
    cval = float(np.mean(np.square(peaks))) if peaks else 0.0
    intervals = tuple((s, e) for _, _, s, e in windows)
    crossings = tuple(v for iv in intervals for v in iv)
    return CurvatureProfile(curve.pair, curve.x, kappa, tau, crossings, intervals, peaks, cval)


def pair_profile(fit1: SmoothFit, fit2: SmoothFit, grid: EvaluationGrid, method: str = "numeric"):
    """Log-ratio curve and curvature profile for one element pair."""
    deriv = derivative_function(method)
    curve = log_ratio_from_derivatives(
        deriv(fit1, grid), deriv(fit2, grid), (fit1.element, fit2.element)
    )
    return curve, curvature_profile(curve)


def derivative_function(method: str):
    if method == "numeric":
        return numeric_derivatives
    if method == "analytic":
        return analytic_derivatives
    raise ValueError("method must be 'numeric' or 'analytic'")


def detect_intervals(profile: CurvatureProfile, origin: float = 0.0, extent: float = 1.0):
    """Exceedance windows mapped from normalized positions to transect distance."""
    return [(origin + s * extent, origin + e * extent) for s, e in profile.intervals]


def curve_dump(curve: LogRatioCurve, profile: CurvatureProfile) -> np.ndarray:
    """Columns x, g, scaled g, kappa, threshold, above-threshold flag."""
    n = len(curve.x)
    return np.column_stack(
        [
            curve.x,
            curve.g,
            curve.scaled,
            profile.kappa,
            np.full(n, profile.threshold),
            profile.above.astype(float),
        ]
    )
