"""Training configuration: the reference recipe and its smoke-test knobs."""

from __future__ import annotations

from dataclasses import dataclass, field

from hipmetrics import AugmentationRanges


@dataclass(frozen=True)
class IntensityJitter:
    """Multiplicative brightness/contrast plus gamma, applied to [0,1] images."""

    brightness: tuple[float, float] = (0.80, 1.20)
    contrast: tuple[float, float] = (0.85, 1.15)
    gamma: tuple[float, float] = (0.85, 1.15)


@dataclass(frozen=True)
class TrainConfig:
    architecture: str = "unetpp_resnet18"
    pretrained_encoder: bool = False  # ImageNet weights need network access
    input_size: int = 512
    sigma: float = 5.0  # matches the primary toolkit's encoder default
    lr: float = 1e-4
    weight_decay: float = 1e-5
    lr_gamma: float = 0.95  # ExponentialLR decay per epoch
    batch_size: int = 4
    max_epochs: int = 200
    max_steps: int | None = None
    early_stop_patience: int = 10  # epochs without val MRE improvement
    target_val_mre: float | None = None  # stop once reached (smoke runs)
    augment: bool = True
    affine_ranges: AugmentationRanges = field(default_factory=AugmentationRanges)
    jitter: IntensityJitter = field(default_factory=IntensityJitter)
    seed: int = 0
    num_workers: int = 0

    def __post_init__(self):
        if self.architecture != "unetpp_resnet18":
            # config hook for other encoders exists, but only this one is wired
            raise ValueError(f"unsupported architecture {self.architecture!r}")
        if self.input_size < 32 or self.input_size % 32 != 0:
            raise ValueError("input_size must be a positive multiple of 32")
        if self.sigma <= 0 or self.lr <= 0 or self.batch_size < 1:
            raise ValueError("sigma, lr and batch_size must be positive")
