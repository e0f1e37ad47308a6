"""Dataset plumbing: annotation file + split manifest + image directory.

Images are grayscale PNGs at native size, min-max normalised to [0, 1] and
resized/padded into the 512x512 network frame per each record's geometry.
Landmark targets go through the primary toolkit's exact affine, so targets
and pixels share one mapping (the integer-size resize approximates the ideal
placement by at most half a pixel).

Training-time augmentation composes the shared affine sampler (same ranges as
test-time augmentation) applied to image and targets alike with an intensity
jitter applied to the image only.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import torch
from PIL import Image
from torch.utils.data import Dataset

from hipmetrics import (
    LANDMARK_ORDER,
    NETWORK_SIZE,
    Point2,
    SubjectRecord,
    native_to_network,
)
from hipmetrics.heatmaps import sample_tta_params, AffineTransform2D, warp_heatmap
from hipmetrics.io_formats import read_annotations, read_split_manifest

from .config import IntensityJitter, TrainConfig


def load_image_network_frame(record: SubjectRecord, images_dir: Path) -> np.ndarray:
    """Native PNG -> [0,1] float32 on the 512x512 network grid."""
    path = images_dir / f"{record.image_key}.png"
    if not path.exists():
        raise FileNotFoundError(f"image for {record.image_key} not found: {path}")
    img = np.asarray(Image.open(path).convert("F"), dtype=np.float32)
    lo, hi = float(img.min()), float(img.max())
    img = (img - lo) / (hi - lo) if hi > lo else np.zeros_like(img)

    g = record.geometry
    new_w = max(1, round(g.native_width * g.resize_scale))
    new_h = max(1, round(g.native_height * g.resize_scale))
    resized = np.asarray(
        Image.fromarray(img, mode="F").resize((new_w, new_h), Image.BILINEAR),
        dtype=np.float32,
    )
    canvas = np.zeros((NETWORK_SIZE, NETWORK_SIZE), dtype=np.float32)
    x0, y0 = round(g.pad_left), round(g.pad_top)
    canvas[y0 : y0 + new_h, x0 : x0 + new_w] = resized
    return canvas


def records_for_partition(
    annotations_path, manifest_path, partition: Optional[str]
) -> list[SubjectRecord]:
    records = read_annotations(annotations_path)
    if manifest_path is None or partition is None:
        return records
    rows = read_split_manifest(manifest_path)
    wanted = {key for _sid, key, part in rows if part == partition}
    picked = [r for r in records if r.image_key in wanted]
    if not picked:
        raise ValueError(f"split partition {partition!r} matches no records")
    return picked


def apply_intensity_jitter(img: np.ndarray, jitter: IntensityJitter,
                           rng: np.random.Generator) -> np.ndarray:
    brightness = rng.uniform(*jitter.brightness)
    contrast = rng.uniform(*jitter.contrast)
    gamma = rng.uniform(*jitter.gamma)
    out = np.clip(img * brightness, 0.0, 1.0)
    mean = out.mean()
    out = np.clip((out - mean) * contrast + mean, 0.0, 1.0)
    return np.power(out, gamma, dtype=np.float32)


class LandmarkDataset(Dataset):
    """(image tensor, target coordinates) pairs in the model input frame."""

    def __init__(
        self,
        records: Sequence[SubjectRecord],
        images_dir,
        config: TrainConfig,
        augment: bool,
        seed: int = 0,
    ):
        self.records = list(records)
        self.images_dir = Path(images_dir)
        self.config = config
        self.augment = augment and config.augment
        self.rng = np.random.default_rng(seed)
        self.scale = config.input_size / NETWORK_SIZE
        self._cache: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    def __len__(self):
        return len(self.records)

    def _base_item(self, record: SubjectRecord):
        if record.image_key not in self._cache:
            img = load_image_network_frame(record, self.images_dir)
            size = self.config.input_size
            if size != NETWORK_SIZE:
                img = np.asarray(
                    Image.fromarray(img, mode="F").resize((size, size), Image.BILINEAR),
                    dtype=np.float32,
                )
            coords = np.array(
                [
                    native_to_network(record.ground_truth[lid], record.geometry)
                    for lid in LANDMARK_ORDER
                ],
                dtype=np.float64,
            ) * self.scale
            self._cache[record.image_key] = (img, coords)
        return self._cache[record.image_key]

    def __getitem__(self, index: int):
        record = self.records[index]
        img, coords = self._base_item(record)
        if self.augment:
            size = self.config.input_size
            p = sample_tta_params(self.rng, self.config.affine_ranges, size, size)
            t = AffineTransform2D.from_params(
                scale=p.scale, rotation_deg=p.rotation_deg, shear_deg=p.shear_deg,
                translate_x=p.translate_x, translate_y=p.translate_y,
                center=((size - 1) / 2.0, (size - 1) / 2.0),
            )
            img = warp_heatmap(img, t)  # bilinear image warp, zero fill
            coords = np.array([t.apply(Point2(x, y)) for x, y in coords])
            img = apply_intensity_jitter(img, self.config.jitter, self.rng)
        tensor = torch.from_numpy(np.array(img, dtype=np.float32)).unsqueeze(0)
        return tensor, torch.from_numpy(coords.astype(np.float32)), record.image_key
