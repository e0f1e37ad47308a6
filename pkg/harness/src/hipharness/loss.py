"""Spatial-softmax NLL loss and the pixel radial-error metric.

The loss follows the primary toolkit's scoring convention: each landmark's
logit map is treated as unnormalised log-scores over the grid and the loss is
the negative log probability at the integer pixel nearest the target, summed
over the landmarks. A zero logit map therefore costs exactly log(H*W) per
landmark.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F


def heatmap_nll(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """NLL summed over landmarks, averaged over the batch.

    logits: (B, K, H, W); targets: (B, K, 2) as (x, y) in pixel coordinates.
    """
    b, k, h, w = logits.shape
    flat = logits.reshape(b, k, h * w)
    tx = targets[..., 0].round().long().clamp(0, w - 1)
    ty = targets[..., 1].round().long().clamp(0, h - 1)
    idx = (ty * w + tx).unsqueeze(-1)  # (B, K, 1)
    logp = F.log_softmax(flat, dim=-1)
    picked = torch.gather(logp, -1, idx).squeeze(-1)  # (B, K)
    return (-picked).sum(dim=1).mean()


@torch.no_grad()
def mean_radial_error_px(logits: torch.Tensor, targets: torch.Tensor) -> float:
    """Mean Euclidean argmax error in pixels across batch and landmarks."""
    b, k, h, w = logits.shape
    flat_idx = logits.reshape(b, k, h * w).argmax(dim=-1)
    px = (flat_idx % w).float()
    py = torch.div(flat_idx, w, rounding_mode="floor").float()
    d = torch.sqrt((px - targets[..., 0]) ** 2 + (py - targets[..., 1]) ** 2)
    return float(d.mean())
