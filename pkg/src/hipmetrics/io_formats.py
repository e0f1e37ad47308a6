"""Portable file formats: annotations, heatmaps, split manifests, reports.

Text formats are JSON (human-auditable; clinical-adjacent tooling benefits
from inspectable files). Heatmaps use a compact binary container because a
four-landmark 512x512 stack is ~4 MiB per subject. All binary fields are
little-endian; see docs/heatmap_file_format.md for the byte-level layout and
a hex-annotated example.

Readers validate fully before returning: on any error they raise
:class:`FormatError` with file/field context and never hand back partially
parsed data.
"""

from __future__ import annotations

import csv
import io
import json
import math
import struct
import warnings
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence, Union

import numpy as np

from .core import (
    LANDMARK_ORDER,
    AnglePair,
    Frame,
    ImageGeometry,
    LandmarkId,
    LandmarkSet,
    Point2,
    SubjectRecord,
)
from .errors import FormatError
from .geometry import classify
from .heatmaps import AffineTransform2D, HeatmapStack

ANNOTATION_FORMAT = "hipmetrics-annotations"
ANNOTATION_VERSION = 1
REPORT_FORMAT = "hipmetrics-report"
REPORT_VERSION = 1

HEATMAP_MAGIC = b"HMF1"
HEATMAP_VERSION = 1

PathLike = Union[str, Path]


# --- annotations -------------------------------------------------------------

_GEOMETRY_FIELDS = {
    "native_width": int,
    "native_height": int,
    "pixel_spacing_x": float,
    "pixel_spacing_y": float,
    "resize_scale": float,
    "pad_left": float,
    "pad_top": float,
}
_GEOMETRY_OPTIONAL = {"slice_spacing"}
_SUBJECT_FIELDS = {"subject_id", "image_key", "modality", "geometry", "ground_truth"}
_SUBJECT_OPTIONAL = {"predicted", "clinician_angles"}
_MODALITIES = {"xray", "mri"}


def _fail(ctx: str, message: str) -> "FormatError":
    return FormatError(f"{ctx}: {message}")


def _check_unknown(ctx: str, obj: Mapping[str, Any], known: set, strict: bool) -> None:
    unknown = sorted(set(obj) - known)
    if not unknown:
        return
    if strict:
        raise _fail(ctx, f"unknown fields {unknown}")
    warnings.warn(f"{ctx}: ignoring unknown fields {unknown}", stacklevel=3)


def _parse_point(ctx: str, value: Any) -> Point2:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        raise _fail(ctx, f"expected [x, y] numbers, got {value!r}")
    if not all(math.isfinite(v) for v in value):
        raise _fail(ctx, f"coordinates must be finite, got {value!r}")
    return Point2(float(value[0]), float(value[1]))


def _parse_landmark_set(ctx: str, obj: Any, strict: bool) -> LandmarkSet:
    if not isinstance(obj, dict):
        raise _fail(ctx, "expected an object with 'frame' and 'points'")
    _check_unknown(ctx, obj, {"frame", "points"}, strict)
    try:
        frame = Frame(obj.get("frame"))
    except ValueError:
        raise _fail(ctx, f"frame must be one of {[f.value for f in Frame]}, "
                         f"got {obj.get('frame')!r}") from None
    points_obj = obj.get("points")
    if not isinstance(points_obj, dict):
        raise _fail(ctx, "missing 'points' object")
    points: dict[LandmarkId, Point2] = {}
    for lid in LANDMARK_ORDER:
        if lid.value not in points_obj:
            raise _fail(f"{ctx}.points", f"missing {lid.value}")
        points[lid] = _parse_point(f"{ctx}.points.{lid.value}", points_obj[lid.value])
    _check_unknown(f"{ctx}.points", points_obj, {l.value for l in LANDMARK_ORDER}, strict)
    try:
        return LandmarkSet(points=points, frame=frame)
    except Exception as exc:
        raise _fail(ctx, str(exc)) from None


def _parse_geometry(ctx: str, obj: Any, strict: bool) -> ImageGeometry:
    if not isinstance(obj, dict):
        raise _fail(ctx, "expected a geometry object")
    _check_unknown(ctx, obj, set(_GEOMETRY_FIELDS) | _GEOMETRY_OPTIONAL, strict)
    kwargs: dict[str, Any] = {}
    for name, typ in _GEOMETRY_FIELDS.items():
        if name not in obj:
            raise _fail(ctx, f"missing {name}")
        v = obj[name]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise _fail(ctx, f"{name} must be a number, got {v!r}")
        kwargs[name] = typ(v)
    if "slice_spacing" in obj and obj["slice_spacing"] is not None:
        kwargs["slice_spacing"] = float(obj["slice_spacing"])
    try:
        return ImageGeometry(**kwargs)
    except Exception as exc:
        raise _fail(ctx, str(exc)) from None


def _parse_angles(ctx: str, obj: Any, strict: bool) -> AnglePair:
    if not isinstance(obj, dict):
        raise _fail(ctx, "expected an object with alpha_deg and lce_deg")
    _check_unknown(ctx, obj, {"alpha_deg", "lce_deg"}, strict)
    for key in ("alpha_deg", "lce_deg"):
        if key not in obj or isinstance(obj[key], bool) or not isinstance(obj[key], (int, float)):
            raise _fail(ctx, f"missing or non-numeric {key}")
    try:
        return classify(float(obj["alpha_deg"]), float(obj["lce_deg"]))
    except Exception as exc:
        raise _fail(ctx, str(exc)) from None


def read_annotations(path: PathLike, strict: bool = False) -> list[SubjectRecord]:
    """Parse and fully validate an annotation file.

    ``strict`` rejects unknown fields; otherwise they are warned about and
    ignored. Raises :class:`FormatError` with field context on any problem.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise FormatError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at line {exc.lineno}, "
                          f"column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise _fail(str(path), "top level must be an object")
    if doc.get("format") != ANNOTATION_FORMAT:
        raise _fail(str(path), f"format must be {ANNOTATION_FORMAT!r}, "
                               f"got {doc.get('format')!r}")
    if doc.get("version") != ANNOTATION_VERSION:
        raise _fail(str(path), f"unsupported version {doc.get('version')!r}")
    _check_unknown(str(path), doc, {"format", "version", "subjects"}, strict)
    subjects = doc.get("subjects")
    if not isinstance(subjects, list) or not subjects:
        raise _fail(str(path), "subjects must be a non-empty list")

    records: list[SubjectRecord] = []
    seen_keys: set[str] = set()
    for i, obj in enumerate(subjects):
        ctx = f"{path}: subjects[{i}]"
        if not isinstance(obj, dict):
            raise _fail(ctx, "expected an object")
        _check_unknown(ctx, obj, _SUBJECT_FIELDS | _SUBJECT_OPTIONAL, strict)
        for name in ("subject_id", "image_key", "modality"):
            if not isinstance(obj.get(name), str) or not obj.get(name):
                raise _fail(ctx, f"missing or empty {name}")
        if obj["modality"] not in _MODALITIES:
            raise _fail(ctx, f"modality must be one of {sorted(_MODALITIES)}, "
                             f"got {obj['modality']!r}")
        if obj["image_key"] in seen_keys:
            raise _fail(ctx, f"duplicate image_key {obj['image_key']!r}")
        seen_keys.add(obj["image_key"])
        if "geometry" not in obj:
            raise _fail(ctx, "missing geometry")
        geometry = _parse_geometry(f"{ctx}.geometry", obj["geometry"], strict)
        if "ground_truth" not in obj:
            raise _fail(ctx, "missing ground_truth")
        gt = _parse_landmark_set(f"{ctx}.ground_truth", obj["ground_truth"], strict)
        predicted = None
        if obj.get("predicted") is not None:
            predicted = _parse_landmark_set(f"{ctx}.predicted", obj["predicted"], strict)
        angles = None
        if obj.get("clinician_angles") is not None:
            angles = _parse_angles(f"{ctx}.clinician_angles", obj["clinician_angles"], strict)
        records.append(
            SubjectRecord(
                subject_id=obj["subject_id"],
                image_key=obj["image_key"],
                modality=obj["modality"],
                geometry=geometry,
                ground_truth=gt,
                predicted=predicted,
                clinician_angles=angles,
            )
        )
    return records


def _landmark_set_to_obj(lm: LandmarkSet) -> dict:
    return {
        "frame": lm.frame.value,
        "points": {lid.value: [lm[lid].x, lm[lid].y] for lid in LANDMARK_ORDER},
    }


def _geometry_to_obj(g: ImageGeometry) -> dict:
    obj = {name: getattr(g, name) for name in _GEOMETRY_FIELDS}
    if g.slice_spacing is not None:
        obj["slice_spacing"] = g.slice_spacing
    return obj


def write_annotations(records: Sequence[SubjectRecord], path: PathLike) -> None:
    subjects = []
    for r in records:
        obj: dict[str, Any] = {
            "subject_id": r.subject_id,
            "image_key": r.image_key,
            "modality": r.modality,
            "geometry": _geometry_to_obj(r.geometry),
            "ground_truth": _landmark_set_to_obj(r.ground_truth),
        }
        if r.predicted is not None:
            obj["predicted"] = _landmark_set_to_obj(r.predicted)
        if r.clinician_angles is not None:
            obj["clinician_angles"] = {
                "alpha_deg": r.clinician_angles.alpha_deg,
                "lce_deg": r.clinician_angles.lce_deg,
            }
        subjects.append(obj)
    doc = {"format": ANNOTATION_FORMAT, "version": ANNOTATION_VERSION,
           "subjects": subjects}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


# --- binary heatmap files ----------------------------------------------------

_HEADER = struct.Struct("<4sIIII")  # magic, version, K, height, width
_TRANSFORM = struct.Struct("<6d")


def write_heatmap_file(
    arrays: Sequence[np.ndarray],
    path: PathLike,
    view_transform: Optional[AffineTransform2D] = None,
) -> None:
    """Write K heatmaps (landmark-major, row-major float32) to ``path``."""
    if len(arrays) == 0:
        raise FormatError("cannot write a heatmap file with zero landmarks")
    shape = np.asarray(arrays[0]).shape
    if len(shape) != 2:
        raise FormatError(f"heatmaps must be 2-d, got shape {shape}")
    buf = io.BytesIO()
    buf.write(_HEADER.pack(HEATMAP_MAGIC, HEATMAP_VERSION, len(arrays),
                           shape[0], shape[1]))
    identity = view_transform is None or view_transform.is_identity()
    buf.write(b"\x00" if identity else b"\x01")
    if not identity:
        buf.write(_TRANSFORM.pack(*view_transform.flat()))
    for arr in arrays:
        a = np.asarray(arr)
        if a.shape != shape:
            raise FormatError(f"heatmap shapes differ: {a.shape} vs {shape}")
        buf.write(np.ascontiguousarray(a, dtype="<f4").tobytes())
    Path(path).write_bytes(buf.getvalue())


def write_heatmaps(stack: HeatmapStack, path: PathLike) -> None:
    write_heatmap_file(
        [np.asarray(stack.heatmaps[lid]) for lid in LANDMARK_ORDER],
        path,
        stack.view_transform,
    )


def read_heatmap_file(path: PathLike) -> tuple[list[np.ndarray], AffineTransform2D]:
    """Low-level reader: any landmark count K; returns arrays + view transform."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise FormatError(f"{path}: file not found") from None
    if len(raw) < _HEADER.size + 1:
        raise FormatError(f"{path}: truncated header")
    magic, version, k, height, width = _HEADER.unpack_from(raw, 0)
    if magic != HEATMAP_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {HEATMAP_MAGIC!r}")
    if version != HEATMAP_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if k < 1 or height < 1 or width < 1:
        raise FormatError(f"{path}: invalid dimensions K={k}, {height}x{width}")
    offset = _HEADER.size
    flag = raw[offset]
    offset += 1
    transform = AffineTransform2D.identity()
    if flag == 1:
        if len(raw) < offset + _TRANSFORM.size:
            raise FormatError(f"{path}: truncated view transform")
        try:
            transform = AffineTransform2D.from_flat(_TRANSFORM.unpack_from(raw, offset))
        except Exception as exc:
            raise FormatError(f"{path}: invalid view transform: {exc}") from None
        offset += _TRANSFORM.size
    elif flag != 0:
        raise FormatError(f"{path}: invalid transform flag {flag}")
    expected = offset + 4 * k * height * width
    if len(raw) != expected:
        raise FormatError(
            f"{path}: payload length {len(raw)} != expected {expected} "
            f"(truncated or trailing bytes)"
        )
    plane = height * width
    data = np.frombuffer(raw, dtype="<f4", count=k * plane, offset=offset)
    arrays = [
        np.array(data[i * plane : (i + 1) * plane]).reshape(height, width)
        for i in range(k)
    ]
    return arrays, transform


def read_heatmaps(path: PathLike) -> HeatmapStack:
    """Read a four-landmark stack; landmark order is FHC, NA, LAE, LCP."""
    arrays, transform = read_heatmap_file(path)
    if len(arrays) != len(LANDMARK_ORDER):
        raise FormatError(
            f"{path}: expected {len(LANDMARK_ORDER)} landmark heatmaps, got {len(arrays)}"
        )
    return HeatmapStack(
        heatmaps=dict(zip(LANDMARK_ORDER, arrays)),
        view_transform=transform,
    )


# --- split manifest ----------------------------------------------------------

_MANIFEST_HEADER = ["subject_id", "image_key", "partition"]


def write_split_manifest(rows: Sequence[tuple[str, str, str]], path: PathLike) -> None:
    """One row per image: subject_id, image_key, partition."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_MANIFEST_HEADER)
        writer.writerows(rows)


def read_split_manifest(path: PathLike) -> list[tuple[str, str, str]]:
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != _MANIFEST_HEADER:
                raise _fail(str(path), f"expected header {_MANIFEST_HEADER}, got {header}")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != 3:
                    raise _fail(f"{path}:{lineno}", f"expected 3 columns, got {len(row)}")
                if row[2] not in ("train", "val", "test"):
                    raise _fail(f"{path}:{lineno}", f"unknown partition {row[2]!r}")
                rows.append((row[0], row[1], row[2]))
    except FileNotFoundError:
        raise FormatError(f"{path}: file not found") from None
    if not rows:
        raise _fail(str(path), "manifest has no rows")
    return rows


# --- evaluation report -------------------------------------------------------

def cell(value: Optional[float]) -> dict:
    """A report cell: full-precision value plus the two-decimal display form."""
    if value is None:
        return {"value": None, "display": None}
    display = str(Decimal(repr(float(value))).quantize(Decimal("0.01"),
                                                       rounding=ROUND_HALF_UP))
    return {"value": float(value), "display": display}


def write_report(report: Mapping[str, Any], path: PathLike) -> None:
    doc = {"format": REPORT_FORMAT, "version": REPORT_VERSION, **report}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_report(path: PathLike) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise FormatError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict) or doc.get("format") != REPORT_FORMAT:
        raise _fail(str(path), f"not a {REPORT_FORMAT} file")
    if doc.get("version") != REPORT_VERSION:
        raise _fail(str(path), f"unsupported version {doc.get('version')!r}")
    return doc


# --- Bland-Altman export -----------------------------------------------------

def write_bland_altman_export(
    sections: Mapping[str, tuple["BlandAltmanLike", Sequence[tuple[str, float, float]]]],
    path: PathLike,
) -> None:
    """Delimited per-subject (mean, difference) rows for external plotting.

    ``sections`` maps an angle name to (summary, rows) where rows are
    (image_key, mean_deg, diff_deg). Summaries ride in '#' comment lines so
    the body stays a plain CSV.
    """
    lines = []
    for angle, (summary, _rows) in sections.items():
        fields = [
            f"angle={angle}",
            f"n={summary.n}",
            f"bias={summary.bias!r}",
            f"sd_diff={summary.sd_diff!r}",
            f"loa_low={summary.loa_low!r}",
            f"loa_high={summary.loa_high!r}",
            f"slope={'' if summary.slope is None else repr(summary.slope)}",
            f"intercept={'' if summary.intercept is None else repr(summary.intercept)}",
            f"slope_p={'' if summary.slope_p is None else repr(summary.slope_p)}",
        ]
        lines.append("# " + " ".join(fields))
    lines.append("angle,image_key,mean_deg,diff_deg")
    for angle, (_summary, rows) in sections.items():
        for image_key, mean_deg, diff_deg in rows:
            lines.append(f"{angle},{image_key},{mean_deg!r},{diff_deg!r}")
    Path(path).write_text("\n".join(lines) + "\n")
