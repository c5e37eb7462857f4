"""Run configuration read from an INI file.

Example::

    [run]
    output = results
    top_k = 10

    [columns]
    position = x

    [model]
    power = 1.5

    [material twig]
    path = twig.csv

Relative paths are resolved against the directory holding the config file.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .curvature import EvaluationGrid
from .ingest import ColumnRoles
from .pipeline import ModelSettings
from .synth import Anomaly, SyntheticSpec


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Material:
    name: str
    path: Path


@dataclass(frozen=True)
class RunConfig:
    materials: tuple[Material, ...] = ()
    columns: ColumnRoles = field(default_factory=ColumnRoles)
    model: ModelSettings = field(default_factory=ModelSettings)
    grid: EvaluationGrid = field(default_factory=EvaluationGrid)
    top_k: int = 10
    frequency_k: int = 10
    curves_k: int = 70
    seed: int = 0
    output: Path = Path("lograt-out")
    pair: str | None = None
    known: Path | None = None
    synth: SyntheticSpec = field(default_factory=SyntheticSpec)
    synth_output: Path = Path("synthetic.csv")

    def __post_init__(self):
        for name in ("top_k", "frequency_k", "curves_k"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        names = [m.name for m in self.materials]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate material names")

    def material(self, name: str) -> Material:
        for m in self.materials:
            if m.name == name:
                return m
        raise ConfigError(f"unknown material {name!r}")

    def hash(self) -> str:
        """Short digest of every setting that affects results (not the output dir)."""
        record = {
            "materials": [[m.name, _digest(m.path)] for m in self.materials],
            "columns": asdict(self.columns),
            "model": asdict(self.model),
            "grid": asdict(self.grid),
            "top_k": self.top_k,
            "frequency_k": self.frequency_k,
            "curves_k": self.curves_k,
            "seed": self.seed,
            "pair": self.pair,
            "known": None if self.known is None else _digest(self.known),
            "synth": asdict(self.synth),
        }
        blob = json.dumps(record, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def _digest(path: Path) -> str:
    # inputs enter the hash by content so the same data hashes the same anywhere
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError:
        return f"missing:{Path(path).name}"


def _parse_anomalies(text: str) -> tuple[Anomaly, ...]:
    out = []
    for chunk in text.split(";"):
        parts = chunk.split()
        if not parts:
            continue
        if len(parts) != 4:
            raise ConfigError(f"anomaly needs 'element center width amplitude', got {chunk!r}")
        out.append(Anomaly(int(parts[0]), float(parts[1]), float(parts[2]), float(parts[3])))
    return tuple(out)


def _floats(text: str | None):
    if text is None or not text.strip():
        return None
    return tuple(float(v) for v in text.replace(",", " ").split())


def _words(text: str | None):
    if text is None or not text.strip():
        return None
    return tuple(text.replace(",", " ").split())


def parse_config(text: str, base_dir: Path | str = ".") -> RunConfig:
    base = Path(base_dir)
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc

    def get(section, key, conv=str, default=None):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        if raw.strip() == "":
            return default
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from exc

    def path(raw):
        p = Path(raw.strip())
        return p if p.is_absolute() else base / p

    materials = []
    for section in parser.sections():
        if section.startswith("material"):
            name = section[len("material"):].strip(" :") or "default"
            if not parser.has_option(section, "path"):
                raise ConfigError(f"[{section}] needs a path")
            materials.append(Material(name, path(parser.get(section, "path"))))

    columns = ColumnRoles(
        position=get("columns", "position", default="x"),
        east=get("columns", "east", default="east"),
        north=get("columns", "north", default="north"),
        sample_id=get("columns", "id", default="id"),
        exclude=get("columns", "exclude", _words, default=None) or (),
    )
    try:
        model = ModelSettings(
            power=get("model", "power", float, 1.5),
            lambda_min=get("model", "lambda_min", float, 1e-6),
            lambda_max=get("model", "lambda_max", float, 1e4),
            lambda_count=get("model", "lambda_count", int, 40),
            gcv_gamma=get("model", "gcv_gamma", float, 1.4),
            derivatives=get("model", "derivatives", default="numeric"),
        )
        grid = EvaluationGrid(
            size=get("grid", "points", int, 3000),
            epsilon=get("grid", "epsilon", float, 1e-3),
        )
        seed = get("run", "seed", int, 0)
        synth = SyntheticSpec(
            n=get("synth", "n", int, 30),
            elements=get("synth", "elements", int, 6),
            anomalies=get("synth", "anomalies", _parse_anomalies, ()),
            baseline=get("synth", "baseline", _floats, None),
            noise=get("synth", "noise", float, 0.1),
            seed=seed,
            length=get("synth", "length", float, 1000.0),
            symbols=get("synth", "symbols", _words, None),
        )
        return RunConfig(
            materials=tuple(materials),
            columns=columns,
            model=model,
            grid=grid,
            top_k=get("run", "top_k", int, 10),
            frequency_k=get("run", "frequency_k", int, 10),
            curves_k=get("run", "curves_k", int, 70),
            seed=seed,
            output=get("run", "output", path, base / "lograt-out"),
            pair=get("detect", "pair", str.strip, None),
            known=get("detect", "known", path, None),
            synth=synth,
            synth_output=get("synth", "output", path, base / "synthetic.csv"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, path.parent)


def with_overrides(config: RunConfig, *, top_k=None, seed=None, output=None, pair=None) -> RunConfig:
    changes = {}
    if top_k is not None:
        changes["top_k"] = top_k
    if seed is not None:
        changes["seed"] = seed
        changes["synth"] = replace(config.synth, seed=seed)
    if output is not None:
        changes["output"] = Path(output)
    if pair is not None:
        changes["pair"] = pair
    return replace(config, **changes) if changes else config
