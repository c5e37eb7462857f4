"""Command line front end: ``lograt fit|rank|heatmap|detect|synth|report``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import report
from .config import ConfigError, RunConfig, load_config, with_overrides
from .curvature import curve_dump, detect_intervals
from .gam import FitError, diagnostics_table
from .ingest import IngestError, read_dataset
from .pipeline import MaterialResult, analyze, fit_elements
from .ranking import PairError, accumulate, element_frequency, top_curves
from .synth import generate, to_csv

logger = logging.getLogger("lograt")


class CommandError(RuntimeError):
    pass


def _selected(config: RunConfig, material: str | None):
    if not config.materials:
        raise CommandError("no [material ...] sections in the config")
    return [config.material(material)] if material else list(config.materials)


def _load(config: RunConfig, material: str | None):
    datasets = []
    for mat in _selected(config, material):
        try:
            datasets.append(read_dataset(mat.path, config.columns, mat.name))
        except IngestError as exc:
            raise CommandError(f"{mat.path}: {exc}") from exc
        except OSError as exc:
            raise CommandError(f"cannot read {mat.path}: {exc}") from exc
    return datasets


def _analyze(config: RunConfig, material: str | None) -> list[MaterialResult]:
    out = []
    for ds in _load(config, material):
        logger.info("fitting %d elements for %s", len(ds.elements), ds.material)
        out.append(analyze(ds, config.model, config.grid))
    return out


def _pair_slug(a: str, b: str) -> str:
    return f"{a}-{b}"


def cmd_fit(config: RunConfig, material: str | None = None) -> list[Path]:
    h = config.hash()
    written = []
    for ds in _load(config, material):
        fits = fit_elements(ds, config.model)
        base = config.output / ds.material
        rows = [
            [f.element, f.lam, f.edf, f.deviance, f.gcv_score, f.dispersion, f.iterations]
            for f in fits
        ]
        written.append(
            report.write_table(
                base / "fits.csv",
                ["element", "lambda", "edf", "deviance", "gcv_score", "dispersion", "iterations"],
                rows,
                h,
            )
        )
        for f in fits:
            y, w = ds.series(f.element)
            table = diagnostics_table(f, ds.positions, y, w)
            dist = ds.to_distance(table[:, 0])
            written.append(
                report.write_table(
                    base / "diagnostics" / f"{f.element}.csv",
                    ["position", "distance", "y", "eta", "mu", "pearson_residual"],
                    [[r[0], d, *r[1:]] for r, d in zip(table, dist)],
                    h,
                )
            )
    return written


def write_rank_outputs(config: RunConfig, results: list[MaterialResult]) -> list[Path]:
    h = config.hash()
    written = []
    for res in results:
        base = config.output / res.dataset.material
        for mat, stem in ((res.matrix, "cvalues"), (res.scaled, "cvalues_scaled")):
            header, rows = report.matrix_rows(mat)
            written.append(report.write_table(base / f"{stem}.csv", header, rows, h))
            written.append(report.write_records(base / f"{stem}.json", report.matrix_record(mat, h)))
        ranked = res.ranked()
        top = ranked[: config.top_k]
        written.append(
            report.write_table(base / "ranked.csv", report.RANKED_HEADER, report.ranked_rows(top), h)
        )
        written.append(
            report.write_records(base / "ranked.json", report.ranked_record(top, res.dataset.material, h))
        )
        freq = element_frequency(ranked, config.frequency_k)
        written.append(
            report.write_table(
                base / "frequency.csv",
                ["element", "count", "best_rank"],
                [list(r) for r in freq],
                h,
            )
        )
        written.append(
            report.write_records(
                base / "frequency.json",
                {
                    "config_hash": h,
                    "material": res.dataset.material,
                    "window": config.frequency_k,
                    "rows": [{"element": e, "count": c, "best_rank": r} for e, c, r in freq],
                },
            )
        )
    curves = top_curves([r.matrix for r in results], config.curves_k)
    written.append(
        report.write_table(
            config.output / "top_curves.csv",
            ["material", "rank", "c_value"],
            [[name, i + 1, v] for name, vals in curves.items() for i, v in enumerate(vals)],
            h,
        )
    )
    if len(results) >= 2:
        acc = accumulate([r.scaled for r in results])
        header, rows = report.matrix_rows(acc)
        written.append(report.write_table(config.output / "accumulated.csv", header, rows, h))
        written.append(report.write_records(config.output / "accumulated.json", report.matrix_record(acc, h)))
    return written


def cmd_rank(config: RunConfig, material: str | None = None) -> list[Path]:
    return write_rank_outputs(config, _analyze(config, material))


def write_heatmaps(config: RunConfig, results: list[MaterialResult]) -> list[Path]:
    h = config.hash()
    written = [
        report.write_heatmap(config.output / r.dataset.material / "heatmap.svg", r.scaled, h)
        for r in results
    ]
    if len(results) >= 2:
        acc = accumulate([r.scaled for r in results])
        written.append(report.write_heatmap(config.output / "accumulated_heatmap.svg", acc, h))
    return written


def cmd_heatmap(config: RunConfig, material: str | None = None) -> list[Path]:
    return write_heatmaps(config, _analyze(config, material))


def _parse_pair(text: str) -> tuple[str, str]:
    parts = [p.strip() for p in text.split("/")]
    if len(parts) != 2 or not all(parts):
        raise CommandError(f"pair must look like El1/El2, got {text!r}")
    return parts[0], parts[1]


def read_known(path) -> list[tuple[str, float]]:
    """Known anomaly locations from a CSV file.

    A ``position`` column holds normalized positions; an ``x`` column holds
    transect distances. Each entry comes back tagged with its kind.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None:
        raise CommandError(f"{path}: empty known-anomaly file")
    fields = [f.strip() for f in reader.fieldnames]
    reader.fieldnames = fields
    if "position" in fields:
        key, kind = "position", "position"
    elif "x" in fields:
        key, kind = "x", "distance"
    else:
        raise CommandError(f"{path}: needs a 'position' or 'x' column")
    out = []
    for i, row in enumerate(reader, start=2):
        try:
            out.append((kind, float(row[key])))
        except (TypeError, ValueError):
            raise CommandError(f"{path}: line {i}: cannot parse {row[key]!r}") from None
    return out


def overlap_report(known, intervals_norm, dataset) -> list[list]:
    """One row per known location: where it is and whether a zone covers it."""
    rows = []
    for kind, value in known:
        pos = value if kind == "position" else (value - dataset.origin) / dataset.extent
        hit = next(
            (k for k, (s, e) in enumerate(intervals_norm, start=1) if s <= pos <= e),
            None,
        )
        rows.append([pos, float(dataset.to_distance(pos)), "hit" if hit else "miss", hit or ""])
    return rows


def write_detect_outputs(config: RunConfig, res: MaterialResult, pair=None) -> tuple[tuple[str, str], list[Path]]:
    h = config.hash()
    ds = res.dataset
    if pair is None:
        ranked = res.ranked(1)
        if not ranked:
            raise CommandError("no pairs to detect on")
        pair = (ranked[0].first, ranked[0].second)
    a, b = pair
    for el in pair:
        if el not in ds.elements:
            raise CommandError(f"element {el!r} not in material {ds.material!r}")
    curve, profile = res.profile(a, b)
    base = config.output / ds.material
    slug = _pair_slug(a, b)
    dist_intervals = detect_intervals(profile, ds.origin, ds.extent)
    rows = [
        [k, s, e, d0, d1, peak]
        for k, ((s, e), (d0, d1), peak) in enumerate(
            zip(profile.intervals, dist_intervals, profile.peak_excess), start=1
        )
    ]
    written = [
        report.write_table(
            base / f"intervals_{slug}.csv",
            ["interval", "start_position", "end_position", "start_distance", "end_distance", "peak_excess"],
            rows,
            h,
        ),
        report.write_records(
            base / f"intervals_{slug}.json",
            {
                "config_hash": h,
                "material": ds.material,
                "pair": f"{a}/{b}",
                "threshold": profile.threshold,
                "c_value": profile.c_value,
                "intervals": [
                    {
                        "interval": k,
                        "start_position": s,
                        "end_position": e,
                        "start_distance": d0,
                        "end_distance": d1,
                        "peak_excess": p,
                    }
                    for k, s, e, d0, d1, p in rows
                ],
            },
        ),
    ]
    dump = curve_dump(curve, profile)
    written.append(
        report.write_table(
            base / f"curve_{slug}.csv",
            ["position", "distance", "g", "scaled_g", "kappa", "threshold", "above"],
            [[r[0], float(ds.to_distance(r[0])), *r[1:5], int(r[5])] for r in dump],
            h,
        )
    )
    if config.known is not None:
        known = read_known(config.known)
        orows = overlap_report(known, profile.intervals, ds)
        written.append(
            report.write_table(
                base / f"overlap_{slug}.csv",
                ["position", "distance", "status", "interval"],
                orows,
                h,
            )
        )
    return (a, b), written


def cmd_detect(config: RunConfig, material: str | None = None, pair: str | None = None) -> list[Path]:
    pair = pair or config.pair
    parsed = _parse_pair(pair) if pair and pair != "auto" else None
    written = []
    for res in _analyze(config, material):
        written.extend(write_detect_outputs(config, res, parsed)[1])
    return written


def cmd_synth(config: RunConfig) -> list[Path]:
    dataset, truth = generate(config.synth)
    path = Path(config.synth_output)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_csv(dataset), encoding="utf-8")
    sidecar = path.with_name(path.stem + "_truth.json")
    sidecar.write_text(truth.to_json(), encoding="utf-8")
    return [path, sidecar]


def cmd_report(config: RunConfig, material: str | None = None, pair: str | None = None) -> list[Path]:
    results = _analyze(config, material)
    written = write_rank_outputs(config, results)
    written += write_heatmaps(config, results)
    pair = pair or config.pair
    parsed = _parse_pair(pair) if pair and pair != "auto" else None
    figures = config.output / "figures"
    for res in results:
        ds = res.dataset
        (a, b), paths = write_detect_outputs(config, res, parsed)
        written += paths
        curve, profile = res.profile(a, b)
        slug = _pair_slug(a, b)
        fits = {f.element: f for f in res.fits}
        written.append(
            report.plot_pair_profile(
                curve, profile, figures / f"{ds.material}_curvature_{slug}.svg", ds.to_distance
            )
        )
        written.append(
            report.plot_detection(
                ds,
                fits,
                (a, b),
                detect_intervals(profile, ds.origin, ds.extent),
                figures / f"{ds.material}_detected_{slug}.svg",
            )
        )
        written.append(report.plot_residuals(ds, fits, figures / f"{ds.material}_residuals.svg"))
    written.append(
        report.plot_top_curves(
            top_curves([r.matrix for r in results], config.curves_k), figures / "top_curves.svg"
        )
    )
    return written


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lograt",
        description="Rank element log-ratios along a transect by curvature of smooth fits.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("fit", "fit a smooth per element and dump diagnostics"),
        ("rank", "write c-value matrices, ranked pairs and element frequencies"),
        ("heatmap", "render scaled c-value matrices as SVG heatmaps"),
        ("detect", "report threshold-exceeding zones for one pair"),
        ("synth", "write a synthetic transect with known anomalies"),
        ("report", "rank, heatmap, detect and plot figures in one go"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=name != "synth", help="INI config file")
        p.add_argument("--material", help="restrict to one material")
        p.add_argument("--pair", help="element pair as El1/El2, or 'auto' for the top pair")
        p.add_argument("--top-k", type=int, dest="top_k")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory (synth: output CSV path)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config) if args.config else RunConfig()
        if args.command == "synth":
            config = with_overrides(config, seed=args.seed)
            if args.out:
                config = replace(config, synth_output=Path(args.out))
            written = cmd_synth(config)
        else:
            config = with_overrides(config, top_k=args.top_k, seed=args.seed, output=args.out)
            if args.command == "fit":
                written = cmd_fit(config, args.material)
            elif args.command == "rank":
                written = cmd_rank(config, args.material)
            elif args.command == "heatmap":
                written = cmd_heatmap(config, args.material)
            elif args.command == "detect":
                written = cmd_detect(config, args.material, args.pair)
            else:
                written = cmd_report(config, args.material, args.pair)
    except (CommandError, ConfigError, FitError, PairError, IngestError, ValueError) as exc:
        print(f"lograt: error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
