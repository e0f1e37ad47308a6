"""Inference: export per-view heatmap files for the primary toolkit.

One file per subject per view, each carrying its view transform; the primary
toolkit owns the inverse-warp averaging, so no aggregation happens here.
Exports are always 512x512 network-frame grids (logits from reduced-size
models are upsampled and their view transforms rescaled accordingly).
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np
import torch
import torch.nn.functional as F

from hipmetrics import NETWORK_SIZE
from hipmetrics.heatmaps import AffineTransform2D, sample_tta_params, warp_heatmap
from hipmetrics.io_formats import write_heatmap_file

from .config import TrainConfig
from .data import LandmarkDataset, records_for_partition


def _rescale_transform(t: AffineTransform2D, factor: float) -> AffineTransform2D:
    """Conjugate by a uniform coordinate scaling about the origin."""
    (a, b, c), (d, e, f) = t.matrix
    return AffineTransform2D(((a, b, c * factor), (d, e, f * factor)))


@torch.no_grad()
def infer(
    model,
    images_dir,
    annotations_path,
    out_dir,
    config: TrainConfig,
    tta_views: int = 1,
    seed: int = 0,
    split_manifest: Optional[str] = None,
    partition: Optional[str] = None,
    device: str = "cpu",
) -> list[Path]:
    """Run the model over a cohort and write one HeatmapFile per view."""
    model = model.to(device).eval()
    records = records_for_partition(annotations_path, split_manifest, partition)
    dataset = LandmarkDataset(records, images_dir, config, augment=False)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    size = config.input_size
    upscale = NETWORK_SIZE / size

    written: list[Path] = []
    for index, record in enumerate(records):
        image, _coords, _key = dataset[index]
        base = image.numpy()[0]
        views = [(AffineTransform2D.identity(), base)]
        for _ in range(max(tta_views, 1) - 1):
            p = sample_tta_params(rng, config.affine_ranges, size, size)
            t = AffineTransform2D.from_params(
                scale=p.scale, rotation_deg=p.rotation_deg, shear_deg=p.shear_deg,
                translate_x=p.translate_x, translate_y=p.translate_y,
                center=((size - 1) / 2.0, (size - 1) / 2.0),
            )
            views.append((t, warp_heatmap(base, t)))

        for v, (transform, img) in enumerate(views):
            tensor = torch.from_numpy(img).unsqueeze(0).unsqueeze(0).to(device)
            logits = model(tensor)
            if size != NETWORK_SIZE:
                logits = F.interpolate(logits, size=(NETWORK_SIZE, NETWORK_SIZE),
                                       mode="bilinear", align_corners=False)
                transform = _rescale_transform(transform, upscale)
            arrays = [logits[0, k].cpu().numpy().astype(np.float32)
                      for k in range(logits.shape[1])]
            if len(views) == 1:
                path = out_dir / f"{record.image_key}.hmf"
            else:
                path = out_dir / f"{record.image_key}__v{v:03d}.hmf"
            write_heatmap_file(arrays, path,
                               None if transform.is_identity() else transform)
            written.append(path)
    return written
