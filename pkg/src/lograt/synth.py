"""Synthetic transects with known anomaly locations.

Each anomaly adds a peak ``a / (1 + ((x - x0) / width)^2)`` on top of a unit
background; the result is multiplied by the element's baseline level and by
log-normal noise, so concentrations stay strictly positive.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .ingest import TransectDataset, compute_outlier_weights, normalize_positions

SYMBOLS = (
    "Co", "Al", "Fe", "Cu", "Ni", "Zn", "As", "Mn", "Mg", "Ca", "K", "Na", "P",
    "S", "Ba", "Sr", "Pb", "Cr", "V", "Ti", "Mo", "Sb", "Bi", "Au", "Ag", "Se",
    "Te", "U", "Th", "B",
)


@dataclass(frozen=True)
class Anomaly:
    element: int
    center: float
    width: float
    amplitude: float

    def __post_init__(self):
        if not 0.0 <= self.center <= 1.0:
            raise ValueError("anomaly center must lie in [0, 1]")
        if self.width <= 0 or self.amplitude <= 0:
            raise ValueError("anomaly width and amplitude must be positive")


@dataclass(frozen=True)
class SyntheticSpec:
    n: int = 30
    elements: int = 6
    anomalies: tuple[Anomaly, ...] = ()
    baseline: tuple[float, ...] | None = None
    noise: float = 0.1
    seed: int = 0
    length: float = 1000.0
    symbols: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n < 4 or self.elements < 2:
            raise ValueError("need at least 4 samples and 2 elements")
        if self.noise < 0:
            raise ValueError("noise sd must be nonnegative")
        for a in self.anomalies:
            if not 0 <= a.element < self.elements:
                raise ValueError(f"anomaly refers to element {a.element} out of range")
        if self.baseline is not None and (
            len(self.baseline) != self.elements or min(self.baseline) <= 0
        ):
            raise ValueError("need one positive baseline per element")
        if self.symbols is not None and len(self.symbols) != self.elements:
            raise ValueError("need one symbol per element")
        if self.symbols is None and self.elements > len(SYMBOLS):
            raise ValueError(f"at most {len(SYMBOLS)} elements without explicit symbols")

    @property
    def element_symbols(self) -> tuple[str, ...]:
        return self.symbols if self.symbols is not None else SYMBOLS[: self.elements]

    @property
    def baselines(self) -> np.ndarray:
        if self.baseline is not None:
            return np.asarray(self.baseline, dtype=float)
        return 10.0 * (1.0 + np.arange(self.elements))


def peak(x, center: float = 0.0, width: float = 1.0):
    """The motivating peak shape ``1 / (1 + ((x - center) / width)^2)``."""
    u = (np.asarray(x, dtype=float) - center) / width
    return 1.0 / (1.0 + u * u)


@dataclass(frozen=True)
class GroundTruth:
    anomalies: tuple[Anomaly, ...]
    symbols: tuple[str, ...]
    length: float

    @property
    def anomalous_elements(self) -> list[str]:
        return sorted({self.symbols[a.element] for a in self.anomalies})

    def to_json(self) -> str:
        record = {
            "length": self.length,
            "anomalous_elements": self.anomalous_elements,
            "anomalies": [
                dict(asdict(a), symbol=self.symbols[a.element]) for a in self.anomalies
            ],
        }
        return json.dumps(record, indent=2, sort_keys=True) + "\n"


def signal(spec: SyntheticSpec, x) -> np.ndarray:
    """Noise-free concentrations, shape ``(elements, len(x))``."""
    x = np.asarray(x, dtype=float)
    shape = np.ones((spec.elements, len(x)))
    for a in spec.anomalies:
        shape[a.element] += a.amplitude * peak(x, a.center, a.width)
    return spec.baselines[:, None] * shape


def generate(spec: SyntheticSpec) -> tuple[TransectDataset, GroundTruth]:
    x = np.linspace(0.0, 1.0, spec.n)
    rng = np.random.default_rng(spec.seed)
    z = rng.standard_normal((spec.n, spec.elements)).T
    values = signal(spec, x) * np.exp(spec.noise * z)
    distances = x * spec.length
    dataset = TransectDataset(
        positions=normalize_positions(distances),
        elements=spec.element_symbols,
        values=values,
        weights=np.vstack([compute_outlier_weights(v) for v in values]),
        ids=tuple(f"s{i + 1:03d}" for i in range(spec.n)),
        distances=distances,
        origin=0.0,
        extent=spec.length,
        material="synthetic",
    )
    truth = GroundTruth(spec.anomalies, spec.element_symbols, spec.length)
    return dataset, truth


def to_csv(dataset: TransectDataset) -> str:
    """Render a dataset in the delimited format the ingest module reads."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "x", *dataset.elements])
    for i in range(dataset.n):
        writer.writerow(
            [dataset.ids[i], repr(float(dataset.distances[i]))]
            + [repr(float(v)) for v in dataset.values[:, i]]
        )
    return buf.getvalue()
