"""Reading sample tables and turning them into a normalized transect."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

MIN_SAMPLES = 4
JITTER = 1e-6


class IngestError(ValueError):
    """Problem with an input table; the message names the offending cell."""


@dataclass(frozen=True)
class ColumnRoles:
    position: str = "x"
    east: str = "east"
    north: str = "north"
    sample_id: str = "id"
    exclude: tuple[str, ...] = ()


@dataclass(frozen=True)
class RawSampleTable:
    ids: tuple[str, ...]
    coords: np.ndarray  # (n, 1) distances or (n, 2) easting/northing
    elements: tuple[str, ...]
    values: np.ndarray  # (n, m)

    @property
    def n(self) -> int:
        return len(self.ids)

    def column(self, element: str) -> np.ndarray:
        return self.values[:, self.elements.index(element)]


@dataclass(frozen=True)
class TransectDataset:
    """Samples ordered along the transect with positions in [0, 1].

    ``values`` and ``weights`` have shape ``(m, n)``: one row per element.
    ``origin`` and ``extent`` map positions back to distance units.
    """

    positions: np.ndarray
    elements: tuple[str, ...]
    values: np.ndarray
    weights: np.ndarray
    ids: tuple[str, ...] = ()
    distances: np.ndarray | None = None
    origin: float = 0.0
    extent: float = 1.0
    material: str = ""

    @property
    def n(self) -> int:
        return len(self.positions)

    def series(self, element: str) -> tuple[np.ndarray, np.ndarray]:
        k = self.elements.index(element)
        return self.values[k], self.weights[k]

    def to_distance(self, position):
        return self.origin + np.asarray(position, dtype=float) * self.extent


def _parse_number(text: str, line: int, column: str, sample: str) -> float:
    text = text.strip()
    if text == "":
        raise IngestError(f"line {line}: missing value in column {column} (sample {sample})")
    try:
        value = float(text)
    except ValueError:
        raise IngestError(
            f"line {line}: cannot parse {text!r} in column {column} (sample {sample})"
        ) from None
    if not math.isfinite(value):
        raise IngestError(f"line {line}: non-finite value in column {column} (sample {sample})")
    return value


def parse_table(stream, roles: ColumnRoles | None = None, delimiter: str = ",") -> RawSampleTable:
    """Parse a delimited sample table.

    The header must name either the position column or both coordinate
    columns; every other column except the id and excluded ones is read as an
    element concentration.

    Raises
    ------
    IngestError
        Missing position column, fewer than two element columns, unparseable
        or missing or negative concentrations, or fewer than four samples.
    """
    roles = ColumnRoles() if roles is None else roles
    if isinstance(stream, (bytes, bytearray)):
        stream = io.StringIO(stream.decode("utf-8"))
    elif isinstance(stream, str):
        stream = io.StringIO(stream)
    elif isinstance(stream, io.BufferedIOBase) or "b" in getattr(stream, "mode", ""):
        stream = io.TextIOWrapper(stream, encoding="utf-8")
    reader = csv.reader(stream, delimiter=delimiter)
    rows_iter = (r for r in reader if r and any(c.strip() for c in r) and not r[0].lstrip().startswith("#"))
    try:
        header = [h.strip() for h in next(rows_iter)]
    except StopIteration:
        raise IngestError("empty table") from None

    if roles.position in header:
        coord_cols = [roles.position]
    elif roles.east in header and roles.north in header:
        coord_cols = [roles.east, roles.north]
    else:
        raise IngestError(
            f"missing position column: expected {roles.position!r} "
            f"or {roles.east!r} and {roles.north!r}"
        )
    skip = set(coord_cols) | {roles.sample_id} | set(roles.exclude)
    elements = [h for h in header if h not in skip]
    if len(elements) < 2:
        raise IngestError("at least 2 element columns are required")
    if len(set(header)) != len(header):
        raise IngestError("duplicate column names in header")
    index = {h: i for i, h in enumerate(header)}

    ids, coords, rows = [], [], []
    for row in rows_iter:
        line = reader.line_num
        if len(row) != len(header):
            raise IngestError(f"line {line}: expected {len(header)} fields, found {len(row)}")
        sample = row[index[roles.sample_id]].strip() if roles.sample_id in index else str(len(ids) + 1)
        coords.append([_parse_number(row[index[c]], line, c, sample) for c in coord_cols])
        values = []
        for el in elements:
            v = _parse_number(row[index[el]], line, el, sample)
            if v < 0:
                raise IngestError(f"line {line}: negative concentration in row {sample}, column {el}")
            values.append(v)
        ids.append(sample)
        rows.append(values)
    if len(rows) < MIN_SAMPLES:
        raise IngestError(f"at least {MIN_SAMPLES} samples are required, found {len(rows)}")
    return RawSampleTable(
        ids=tuple(ids),
        coords=np.asarray(coords, dtype=float),
        elements=tuple(elements),
        values=np.asarray(rows, dtype=float),
    )


def project_to_transect(coords) -> np.ndarray:
    """Offsets of 2-D points along their first principal axis, minimum at 0.

    The axis is oriented so that the first point does not lie ahead of the
    last one.
    """
    pts = np.asarray(coords, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("expected an (n, 2) array of coordinates")
    centred = pts - pts.mean(axis=0)
    if len(pts) < 2 or np.allclose(centred, 0.0, atol=0.0):
        raise ValueError("need at least 2 distinct points to define a transect axis")
    cov = centred.T @ centred / len(pts)
    _, vecs = np.linalg.eigh(cov)
    axis = vecs[:, -1]
    offsets = centred @ axis
    if offsets[0] > offsets[-1]:
        offsets = -offsets
    return offsets - offsets.min()


def normalize_positions(distances) -> np.ndarray:
    """Affine map onto [0, 1]; tied positions are pulled apart by 1e-6 steps.

    Within a group of equal positions the k-th occurrence (in input order,
    counting from 0) moves up by ``k * 1e-6``. A jittered value that would
    reach the next distinct position pushes that one along as well, so the
    result is always strictly increasing in sorted order. If anything ends up
    past 1 the whole vector is rescaled back onto [0, 1].
    """
    d = np.asarray(distances, dtype=float)
    lo, hi = d.min(), d.max()
    if not hi > lo:
        raise ValueError("positions have zero range")
    pos = (d - lo) / (hi - lo)
    order = np.argsort(pos, kind="stable")
    sorted_pos = pos[order]
    moved = False
    for i in range(1, len(sorted_pos)):
        if sorted_pos[i] <= sorted_pos[i - 1]:
            sorted_pos[i] = sorted_pos[i - 1] + JITTER
            moved = True
    if moved:
        if sorted_pos[-1] > 1.0:
            sorted_pos = sorted_pos / sorted_pos[-1]
        pos = np.empty_like(pos)
        pos[order] = sorted_pos
    return pos


def compute_outlier_weights(y) -> np.ndarray:
    """Weights ``max(|y - mean| / sd, 1)`` rescaled to mean 1.

    Values more than one sample standard deviation from the mean are
    upweighted in proportion to their z-score. A constant series gets unit
    weights.
    """
    y = np.asarray(y, dtype=float)
    if len(y) < 2:
        raise ValueError("need at least 2 observations")
    sd = np.std(y, ddof=1)
    if not sd > 0:
        return np.ones_like(y)
    raw = np.maximum(np.abs(y - y.mean()) / sd, 1.0)
    return raw / raw.mean()


def build_dataset(table: RawSampleTable, material: str = "") -> TransectDataset:
    """Project, normalize and sort a parsed table and attach outlier weights."""
    if table.coords.shape[1] == 2:
        distances = project_to_transect(table.coords)
    else:
        distances = table.coords[:, 0].copy()
    positions = normalize_positions(distances)
    order = np.argsort(positions, kind="stable")
    values = table.values[order].T.copy()
    weights = np.vstack([compute_outlier_weights(v) for v in values])
    lo = float(distances.min())
    return TransectDataset(
        positions=positions[order],
        elements=table.elements,
        values=values,
        weights=weights,
        ids=tuple(table.ids[i] for i in order),
        distances=distances[order],
        origin=lo,
        extent=float(distances.max()) - lo,
        material=material,
    )


def read_dataset(path, roles: ColumnRoles | None = None, material: str = "") -> TransectDataset:
    with open(path, encoding="utf-8", newline="") as fh:
        table = parse_table(fh, roles)
    return build_dataset(table, material)
