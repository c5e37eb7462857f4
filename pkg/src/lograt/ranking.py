"""c-value matrices, hitlists and cross-material aggregation."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from .curvature import (
    EvaluationGrid,
    curvature_profile,
    derivative_function,
    log_ratio_from_derivatives,
)


class PairError(RuntimeError):
    def __init__(self, pair, cause):
        super().__init__(f"pair {pair[0]}/{pair[1]}: {cause}")
        self.pair = pair


@dataclass(frozen=True)
class CValueMatrix:
    """Symmetric pair scores with a zero diagonal.

    ``coverage`` counts, per cell, the materials that contributed; it is only
    set on accumulated matrices, where cells with coverage 0 hold NaN.
    """

    elements: tuple[str, ...]
    values: np.ndarray
    material: str = ""
    scaled: bool = False
    coverage: np.ndarray | None = None

    def __post_init__(self):
        m = len(self.elements)
        if self.values.shape != (m, m):
            raise ValueError("matrix shape does not match the element list")

    def value(self, a: str, b: str) -> float:
        return float(self.values[self.elements.index(a), self.elements.index(b)])

    def pairs(self):
        """Unordered pairs ``(a, b, value)`` in matrix order, absent cells skipped."""
        for i, j in combinations(range(len(self.elements)), 2):
            v = self.values[i, j]
            if not np.isnan(v):
                yield self.elements[i], self.elements[j], float(v)


def build_matrix(fits, grid: EvaluationGrid | None = None, material: str = "", method: str = "numeric"):
    """Score every element pair; returns the matrix and the per-pair profiles."""
    fits = list(fits)
    if len(fits) < 2:
        raise ValueError("need at least 2 fitted elements")
    grid = EvaluationGrid() if grid is None else grid
    deriv = derivative_function(method)
    derivs = [deriv(f, grid) for f in fits]
    m = len(fits)
    values = np.zeros((m, m))
    profiles = {}
    for i, j in combinations(range(m), 2):
        pair = (fits[i].element, fits[j].element)
        try:
            curve = log_ratio_from_derivatives(derivs[i], derivs[j], pair)
            profile = curvature_profile(curve)
        except (ValueError, FloatingPointError, ArithmeticError) as exc:
            raise PairError(pair, exc) from exc
        values[i, j] = values[j, i] = profile.c_value
        profiles[pair] = (curve, profile)
    elements = tuple(f.element for f in fits)
    return CValueMatrix(elements, values, material), profiles


def scale_matrix(c: CValueMatrix) -> CValueMatrix:
    """Divide by the largest entry; an all-zero matrix is returned as is."""
    top = np.nanmax(c.values) if np.any(~np.isnan(c.values)) else 0.0
    if top > 0:
        return replace(c, values=c.values / top, scaled=True)
    return replace(c, values=c.values.copy(), scaled=True)


@dataclass(frozen=True)
class RankedRow:
    rank: int
    first: str
    second: str
    value: float
    scaled_value: float

    @property
    def pair(self) -> str:
        return f"{self.first}/{self.second}"


def _order_key(row):
    a, b, v = row
    return (-v, tuple(sorted((a, b))))


def top_k(c: CValueMatrix, k: int | None = None) -> list[RankedRow]:
    """Highest scoring pairs; ties go to the lexicographically smaller pair."""
    if k is not None and k < 1:
        raise ValueError("k must be at least 1")
    rows = sorted(c.pairs(), key=_order_key)
    top = max((v for _, _, v in rows), default=0.0)
    rows = rows if k is None else rows[:k]
    return [
        RankedRow(r, a, b, v, v / top if top > 0 else 0.0)
        for r, (a, b, v) in enumerate(rows, start=1)
    ]


def element_frequency(ranked, k: int = 10) -> list[tuple[str, int, int]]:
    """How often each element appears among the first ``k`` ranked pairs.

    Returns ``(element, count, best_rank)`` ordered by count, then by the
    rank of first appearance, then by symbol.
    """
    ranked = list(ranked)
    if not ranked:
        raise ValueError("empty ranking")
    counts: Counter = Counter()
    first_seen: dict[str, int] = {}
    for row in ranked[:k]:
        for el in (row.first, row.second):
            counts[el] += 1
            first_seen.setdefault(el, row.rank)
    return sorted(
        ((el, n, first_seen[el]) for el, n in counts.items()),
        key=lambda t: (-t[1], t[2], t[0]),
    )


def accumulate(matrices, material: str = "accumulated") -> CValueMatrix:
    """Cellwise mean of scaled matrices over the materials containing both elements."""
    matrices = list(matrices)
    if len(matrices) < 2:
        raise ValueError("need at least 2 matrices to accumulate")
    if not all(m.scaled for m in matrices):
        raise ValueError("accumulate expects scaled matrices")
    orders = {m.elements for m in matrices}
    elements = orders.pop() if len(orders) == 1 else tuple(sorted(set().union(*orders)))
    index = {el: i for i, el in enumerate(elements)}
    size = len(elements)
    cells: list[list[list[float]]] = [[[] for _ in range(size)] for _ in range(size)]
    for mat in matrices:
        pos = [index[el] for el in mat.elements]
        for a, ia in enumerate(pos):
            for b, ib in enumerate(pos):
                v = mat.values[a, b]
                if not np.isnan(v):
                    cells[ia][ib].append(float(v))
    values = np.full((size, size), np.nan)
    coverage = np.zeros((size, size), dtype=int)
    for i in range(size):
        for j in range(size):
            if cells[i][j]:
                # fsum makes the mean independent of input order
                values[i, j] = math.fsum(cells[i][j]) / len(cells[i][j])
                coverage[i, j] = len(cells[i][j])
    return CValueMatrix(elements, values, material, scaled=True, coverage=coverage)


def top_curves(matrices, k: int = 70) -> dict[str, np.ndarray]:
    """Per material, its pair scores sorted in decreasing order, first ``k``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    out = {}
    for mat in matrices:
        vals = np.array([v for _, _, v in mat.pairs()])
        out[mat.material] = np.sort(vals)[::-1][:k]
    return out
