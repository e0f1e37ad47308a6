"""Command-line interface.

Subcommands: encode, decode, evaluate, split, bland-altman, aggregate-runs.
Exit codes: 0 success, 1 usage/config error, 2 input validation error,
3 computation degeneracy. All randomness flows from the --seed flag.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import io_formats
from .config import Config, load_config
from .core import (
    LANDMARK_ORDER,
    Frame,
    LandmarkSet,
    Point2,
    SubjectRecord,
    landmarks_to_network,
    network_to_native,
)
from .errors import (
    ConfigError,
    FormatError,
    HipMetricsError,
    SplitError,
    StatsError,
)
from .evaluate import aggregate_runs, evaluate_cohort
from .geometry import angles_for
from .heatmaps import GaussianSpec, decode_argmax, encode_landmarks, tta_aggregate
from .io_formats import read_annotations, read_heatmaps, write_annotations
from .split import PatientImages, balanced_split

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_DEGENERATE = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hipmetrics",
                     description="Hip landmark measurement and agreement toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file "
                       "(falls back to $HIPMETRICS_CONFIG); flags win over file")
        p.add_argument("--sigma", type=float, default=None)
        p.add_argument("--tta-views", type=int, default=None, dest="tta_views")
        p.add_argument("--sdr-radii", default=None, dest="sdr_radii",
                       help="comma-separated radii in mm, e.g. 2,3,4")
        p.add_argument("--alpha-threshold", type=float, default=None,
                       dest="alpha_threshold")
        p.add_argument("--lce-threshold", type=float, default=None,
                       dest="lce_threshold")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--restarts", type=int, default=None)
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument("--strict", action="store_true", default=None)

    p = sub.add_parser("encode", help="encode ground-truth landmarks as heatmap files")
    p.add_argument("annotations")
    p.add_argument("out_dir")
    common(p)

    p = sub.add_parser("decode", help="decode heatmap files into predicted landmarks")
    p.add_argument("heatmap_dir")
    p.add_argument("annotations")
    p.add_argument("out", help="annotation file with predictions merged in")
    common(p)

    p = sub.add_parser("evaluate", help="run the three-tier evaluation")
    p.add_argument("annotations", help="annotation file carrying predictions")
    p.add_argument("out", help="report file (JSON)")
    p.add_argument("--bland-altman-out", dest="ba_out", default=None,
                   help="also write the Bland-Altman export rows here")
    common(p)

    p = sub.add_parser("split", help="KS-balanced patient-level split")
    p.add_argument("annotations")
    p.add_argument("out", help="split manifest (CSV)")
    common(p)

    p = sub.add_parser("bland-altman", help="write only the Bland-Altman export")
    p.add_argument("annotations", help="annotation file carrying predictions")
    p.add_argument("out")
    common(p)

    p = sub.add_parser("aggregate-runs",
                       help="mean +/- std per cell across repeated-run reports")
    p.add_argument("reports", nargs="+", help="two or more report files")
    p.add_argument("--out", required=True)
    return parser


def _config_from_args(args) -> Config:
    overrides = {
        "sigma": getattr(args, "sigma", None),
        "tta_views": getattr(args, "tta_views", None),
        "alpha_threshold": getattr(args, "alpha_threshold", None),
        "lce_threshold": getattr(args, "lce_threshold", None),
        "seed": getattr(args, "seed", None),
        "restarts": getattr(args, "restarts", None),
        "jobs": getattr(args, "jobs", None),
        "strict": getattr(args, "strict", None),
    }
    radii = getattr(args, "sdr_radii", None)
    if radii is not None:
        try:
            overrides["sdr_radii"] = tuple(float(r) for r in radii.split(","))
        except ValueError:
            raise ConfigError(f"cannot parse --sdr-radii {radii!r}") from None
    return load_config(getattr(args, "config", None), overrides)


def _pool_size(cfg: Config) -> int:
    return cfg.jobs if cfg.jobs is not None else (os.cpu_count() or 1)


def _cmd_encode(args) -> int:
    cfg = _config_from_args(args)
    records = read_annotations(args.annotations, strict=cfg.strict)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = GaussianSpec(cfg.sigma)

    def one(record: SubjectRecord) -> str:
        lm = landmarks_to_network(record.ground_truth, record.geometry)
        stack = encode_landmarks(lm.points, spec=spec)
        path = out_dir / f"{record.image_key}.hmf"
        io_formats.write_heatmaps(stack, path)
        return str(path)

    with ThreadPoolExecutor(max_workers=_pool_size(cfg)) as pool:
        paths = list(pool.map(one, records))
    for path in paths:
        print(path)
    return EXIT_OK


def _heatmap_views_for(heatmap_dir: Path, image_key: str) -> list[Path]:
    single = heatmap_dir / f"{image_key}.hmf"
    views = sorted(heatmap_dir.glob(f"{image_key}__v*.hmf"))
    if single.exists():
        views.insert(0, single)
    return views


def _cmd_decode(args) -> int:
    cfg = _config_from_args(args)
    records = read_annotations(args.annotations, strict=cfg.strict)
    heatmap_dir = Path(args.heatmap_dir)

    def one(record: SubjectRecord) -> SubjectRecord:
        paths = _heatmap_views_for(heatmap_dir, record.image_key)
        if not paths:
            raise FormatError(
                f"no heatmap file for subject {record.subject_id} "
                f"(image {record.image_key}) in {heatmap_dir}"
            )
        stacks = [read_heatmaps(p) for p in paths]
        merged = tta_aggregate(stacks) if len(stacks) > 1 else stacks[0]
        points = {}
        for lid in LANDMARK_ORDER:
            p = decode_argmax(merged.heatmaps[lid])
            # peaks decoded inside the padding border have no native preimage;
            # clamp into the image content region before inverting the map
            g = record.geometry
            x = min(max(p.x, g.pad_left), g.pad_left + (g.native_width - 1) * g.resize_scale)
            y = min(max(p.y, g.pad_top), g.pad_top + (g.native_height - 1) * g.resize_scale)
            points[lid] = network_to_native(Point2(x, y), g)
        record.predicted = LandmarkSet(points=points, frame=Frame.NATIVE)
        return record

    with ThreadPoolExecutor(max_workers=_pool_size(cfg)) as pool:
        updated = list(pool.map(one, records))
    write_annotations(updated, args.out)
    print(args.out)
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    cfg = _config_from_args(args)
    records = read_annotations(args.annotations, strict=cfg.strict)
    report, ba_sections = evaluate_cohort(records, cfg)
    report["config"] = {
        "sigma": cfg.sigma,
        "sdr_radii": list(cfg.sdr_radii),
        "alpha_threshold": cfg.alpha_threshold,
        "lce_threshold": cfg.lce_threshold,
    }
    io_formats.write_report(report, args.out)
    if args.ba_out and ba_sections:
        io_formats.write_bland_altman_export(ba_sections, args.ba_out)
    for notice in report["notices"]:
        print(f"notice: {notice}", file=sys.stderr)
    print(args.out)
    return EXIT_OK


def _cmd_bland_altman(args) -> int:
    cfg = _config_from_args(args)
    records = read_annotations(args.annotations, strict=cfg.strict)
    _report, ba_sections = evaluate_cohort(records, cfg)
    if not ba_sections:
        raise StatsError("Bland-Altman needs at least 2 subjects", degenerate=True)
    io_formats.write_bland_altman_export(ba_sections, args.out)
    print(args.out)
    return EXIT_OK


def _cmd_split(args) -> int:
    cfg = _config_from_args(args)
    records = read_annotations(args.annotations, strict=cfg.strict)
    by_patient: dict[str, list[SubjectRecord]] = {}
    for r in records:
        by_patient.setdefault(r.subject_id, []).append(r)
    patients = [
        PatientImages(
            patient_id=pid,
            image_keys=tuple(r.image_key for r in recs),
            alphas=tuple(
                angles_for(r.ground_truth, r.geometry).alpha_deg for r in recs
            ),
        )
        for pid, recs in by_patient.items()
    ]
    assignment = balanced_split(patients, cfg.split_ratios, cfg.seed, cfg.restarts)
    rows = [
        (r.subject_id, r.image_key, assignment.partition_of[r.subject_id])
        for r in records
    ]
    io_formats.write_split_manifest(rows, args.out)
    print(f"{args.out}: max pairwise KS {assignment.objective:.4f} "
          f"(restart {assignment.restart_index})")
    return EXIT_OK


def _cmd_aggregate_runs(args) -> int:
    reports = [io_formats.read_report(p) for p in args.reports]
    io_formats.write_report(aggregate_runs(reports), args.out)
    print(args.out)
    return EXIT_OK


_COMMANDS = {
    "encode": _cmd_encode,
    "decode": _cmd_decode,
    "evaluate": _cmd_evaluate,
    "split": _cmd_split,
    "bland-altman": _cmd_bland_altman,
    "aggregate-runs": _cmd_aggregate_runs,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, SplitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StatsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE if exc.degenerate else EXIT_INPUT
    except HipMetricsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
