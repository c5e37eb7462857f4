"""End-to-end scoring of one material: fit every element, score every pair."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curvature import EvaluationGrid, pair_profile
from .gam import DEFAULT_GAMMA, SmoothFit, TweedieFamily, lambda_grid, select_lambda_gcv
from .ingest import TransectDataset
from .ranking import CValueMatrix, RankedRow, build_matrix, scale_matrix, top_k


@dataclass(frozen=True)
class ModelSettings:
    power: float = 1.5
    lambda_min: float = 1e-6
    lambda_max: float = 1e4
    lambda_count: int = 40
    gcv_gamma: float = DEFAULT_GAMMA
    derivatives: str = "numeric"

    def __post_init__(self):
        if not 1 < self.power < 2:
            raise ValueError("tweedie power must lie in (1, 2)")
        if not 0 < self.lambda_min <= self.lambda_max or self.lambda_count < 1:
            raise ValueError("invalid smoothing parameter grid")
        if self.gcv_gamma < 1:
            raise ValueError("gcv gamma must be >= 1")
        if self.derivatives not in ("numeric", "analytic"):
            raise ValueError("derivatives must be 'numeric' or 'analytic'")

    @property
    def grid(self) -> np.ndarray:
        return lambda_grid(self.lambda_min, self.lambda_max, self.lambda_count)


@dataclass(frozen=True)
class MaterialResult:
    dataset: TransectDataset
    fits: tuple[SmoothFit, ...]
    matrix: CValueMatrix
    scaled: CValueMatrix
    profiles: dict = field(repr=False)
    grid: EvaluationGrid = field(default_factory=EvaluationGrid)
    method: str = "numeric"

    def ranked(self, k: int | None = None) -> list[RankedRow]:
        return top_k(self.matrix, k)

    def fit(self, element: str) -> SmoothFit:
        return self.fits[self.dataset.elements.index(element)]

    def profile(self, a: str, b: str):
        """Curve and profile for a pair, oriented as requested."""
        if (a, b) in self.profiles:
            return self.profiles[(a, b)]
        if (b, a) in self.profiles:
            return pair_profile(self.fit(a), self.fit(b), self.grid, self.method)
        raise KeyError(f"unknown pair {a}/{b}")


def fit_elements(dataset: TransectDataset, settings: ModelSettings | None = None) -> tuple[SmoothFit, ...]:
    settings = ModelSettings() if settings is None else settings
    family = TweedieFamily(settings.power)
    return tuple(
        select_lambda_gcv(
            dataset.positions, y, w, family, settings.grid, element=el, gamma=settings.gcv_gamma
        )
        for el, y, w in zip(dataset.elements, dataset.values, dataset.weights)
    )


def analyze(
    dataset: TransectDataset,
    settings: ModelSettings | None = None,
    grid: EvaluationGrid | None = None,
    fits=None,
) -> MaterialResult:
    settings = ModelSettings() if settings is None else settings
    grid = EvaluationGrid() if grid is None else grid
    fits = fit_elements(dataset, settings) if fits is None else tuple(fits)
    matrix, profiles = build_matrix(fits, grid, dataset.material, settings.derivatives)
    return MaterialResult(
        dataset, fits, matrix, scale_matrix(matrix), profiles, grid, settings.derivatives
    )
