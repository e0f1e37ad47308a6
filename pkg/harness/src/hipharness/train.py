"""Training loop: AdamW + ExponentialLR + early stopping on validation MRE."""

from __future__ import annotations

import json
import time
from dataclasses import asdict
from pathlib import Path
from typing import Optional

import numpy as np
import torch
from torch.utils.data import DataLoader

from hipmetrics import AugmentationRanges

from .config import IntensityJitter, TrainConfig
from .data import LandmarkDataset, records_for_partition
from .loss import heatmap_nll, mean_radial_error_px
from .model import build_model


def seed_everything(seed: int) -> None:
    np.random.seed(seed)
    torch.manual_seed(seed)


def _loader(dataset, config: TrainConfig, shuffle: bool) -> DataLoader:
    gen = torch.Generator()
    gen.manual_seed(config.seed)
    return DataLoader(dataset, batch_size=config.batch_size, shuffle=shuffle,
                      num_workers=config.num_workers, generator=gen)


@torch.no_grad()
def evaluate_mre(model, loader, device) -> float:
    model.eval()
    errors, count = 0.0, 0
    for images, targets, _keys in loader:
        logits = model(images.to(device))
        n = images.shape[0]
        errors += mean_radial_error_px(logits, targets.to(device)) * n
        count += n
    return errors / max(count, 1)


def train(
    images_dir,
    annotations_path,
    out_dir,
    config: TrainConfig = TrainConfig(),
    split_manifest: Optional[str] = None,
    device: str = "cpu",
) -> Path:
    """Train a detector; returns the checkpoint path.

    With a split manifest the train/val partitions drive optimisation and
    early stopping; without one the whole cohort is used for both (overfit /
    smoke runs).
    """
    seed_everything(config.seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    train_records = records_for_partition(
        annotations_path, split_manifest, "train" if split_manifest else None)
    val_records = records_for_partition(
        annotations_path, split_manifest, "val" if split_manifest else None)

    train_ds = LandmarkDataset(train_records, images_dir, config,
                               augment=True, seed=config.seed)
    val_ds = LandmarkDataset(val_records, images_dir, config,
                             augment=False, seed=config.seed + 1)
    train_loader = _loader(train_ds, config, shuffle=True)
    val_loader = _loader(val_ds, config, shuffle=False)

    model = build_model(config.architecture, config.pretrained_encoder).to(device)
    optimiser = torch.optim.AdamW(model.parameters(), lr=config.lr,
                                  weight_decay=config.weight_decay)
    scheduler = torch.optim.lr_scheduler.ExponentialLR(optimiser,
                                                       gamma=config.lr_gamma)

    log_path = out_dir / "training_log.jsonl"
    ckpt_path = out_dir / "checkpoint.pt"
    best_val = float("inf")
    epochs_since_best = 0
    step = 0
    stop = False

    with open(log_path, "w") as log:
        for epoch in range(config.max_epochs):
            model.train()
            for images, targets, _keys in train_loader:
                t0 = time.perf_counter()
                optimiser.zero_grad()
                logits = model(images.to(device))
                loss = heatmap_nll(logits, targets.to(device))
                loss.backward()
                optimiser.step()
                log.write(json.dumps({
                    "step": step, "epoch": epoch, "loss": float(loss.detach()),
                    "lr": optimiser.param_groups[0]["lr"],
                    "sec": round(time.perf_counter() - t0, 4),
                }) + "\n")
                step += 1
                if config.max_steps is not None and step >= config.max_steps:
                    stop = True
                    break
            scheduler.step()

            val_mre = evaluate_mre(model, val_loader, device)
            log.write(json.dumps({"epoch": epoch, "val_mre_px": val_mre}) + "\n")
            log.flush()
            if val_mre < best_val - 1e-6:
                best_val = val_mre
                epochs_since_best = 0
                torch.save({"model": model.state_dict(),
                            "config": asdict(config),
                            "val_mre_px": val_mre}, ckpt_path)
            else:
                epochs_since_best += 1
                if epochs_since_best >= config.early_stop_patience:
                    stop = True
            if config.target_val_mre is not None and best_val <= config.target_val_mre:
                stop = True
            if stop:
                break

    if not ckpt_path.exists():  # no improvement ever recorded; save final state
        torch.save({"model": model.state_dict(), "config": asdict(config),
                    "val_mre_px": best_val}, ckpt_path)
    return ckpt_path


def load_checkpoint(path, device: str = "cpu"):
    payload = torch.load(path, map_location=device, weights_only=False)
    cfg_dict = dict(payload["config"])
    cfg_dict["affine_ranges"] = AugmentationRanges(
        **{k: tuple(v) if isinstance(v, list) else v
           for k, v in cfg_dict["affine_ranges"].items()})
    cfg_dict["jitter"] = IntensityJitter(
        **{k: tuple(v) for k, v in cfg_dict["jitter"].items()})
    config = TrainConfig(**cfg_dict)
    model = build_model(config.architecture, pretrained_encoder=False)
    model.load_state_dict(payload["model"])
    model.eval()
    return model, config
