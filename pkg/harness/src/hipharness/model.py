"""UNet++ decoder over a ResNet18 encoder for landmark heatmap regression.

The network maps a grayscale image (replicated to three channels so ImageNet
weights remain usable) to K logit maps at input resolution. The final 1x1
head is zero-initialised, so an untrained model predicts an exactly uniform
spatial softmax.
"""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn
from torchvision.models import resnet18

ENCODER_CHANNELS = (64, 64, 128, 256, 512)  # at strides 2, 4, 8, 16, 32
DECODER_CHANNELS = (32, 64, 128, 256)  # nested-node width per depth


class ConvBlock(nn.Module):
    def __init__(self, in_ch: int, out_ch: int):
        super().__init__()
        self.block = nn.Sequential(
            nn.Conv2d(in_ch, out_ch, 3, padding=1, bias=False),
            nn.BatchNorm2d(out_ch),
            nn.ReLU(inplace=True),
            nn.Conv2d(out_ch, out_ch, 3, padding=1, bias=False),
            nn.BatchNorm2d(out_ch),
            nn.ReLU(inplace=True),
        )

    def forward(self, x):
        return self.block(x)


class ResNet18Encoder(nn.Module):
    def __init__(self, pretrained: bool = False):
        super().__init__()
        weights = "IMAGENET1K_V1" if pretrained else None
        net = resnet18(weights=weights)
        self.stem = nn.Sequential(net.conv1, net.bn1, net.relu)
        self.pool = net.maxpool
        self.layer1 = net.layer1
        self.layer2 = net.layer2
        self.layer3 = net.layer3
        self.layer4 = net.layer4

    def forward(self, x):
        x0 = self.stem(x)  # /2
        x1 = self.layer1(self.pool(x0))  # /4
        x2 = self.layer2(x1)  # /8
        x3 = self.layer3(x2)  # /16
        x4 = self.layer4(x3)  # /32
        return [x0, x1, x2, x3, x4]


class UNetPlusPlus(nn.Module):
    """Nested dense skip decoder: node X[i][j] sits at encoder depth i."""

    def __init__(self, num_landmarks: int = 4, pretrained_encoder: bool = False):
        super().__init__()
        self.encoder = ResNet18Encoder(pretrained_encoder)
        enc, dec = ENCODER_CHANNELS, DECODER_CHANNELS
        self.blocks = nn.ModuleDict()
        depth = len(enc) - 1  # 4 decoder columns
        for i in range(depth):
            for j in range(1, depth - i + 1):
                up_ch = enc[i + 1] if j == 1 else dec[i + 1]
                in_ch = enc[i] + (j - 1) * dec[i] + up_ch
                self.blocks[f"{i}_{j}"] = ConvBlock(in_ch, dec[i])
        self.head = nn.Conv2d(dec[0], num_landmarks, kernel_size=1)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(self, x):
        if x.shape[1] == 1:
            x = x.repeat(1, 3, 1, 1)
        size = x.shape[-2:]
        enc = self.encoder(x)
        nodes: dict[tuple[int, int], torch.Tensor] = {
            (i, 0): f for i, f in enumerate(enc)
        }
        depth = len(enc) - 1
        for j in range(1, depth + 1):
            for i in range(0, depth - j + 1):
                up = F.interpolate(nodes[(i + 1, j - 1)], scale_factor=2,
                                   mode="bilinear", align_corners=False)
                cat = torch.cat([nodes[(i, k)] for k in range(j)] + [up], dim=1)
                nodes[(i, j)] = self.blocks[f"{i}_{j}"](cat)
        logits = self.head(nodes[(0, depth)])
        # decoder tops out at stride 2; bring logits to input resolution
        return F.interpolate(logits, size=size, mode="bilinear",
                             align_corners=False)


def build_model(architecture: str, pretrained_encoder: bool = False,
                num_landmarks: int = 4) -> nn.Module:
    if architecture != "unetpp_resnet18":
        raise ValueError(f"unsupported architecture {architecture!r}")
    return UNetPlusPlus(num_landmarks=num_landmarks,
                        pretrained_encoder=pretrained_encoder)
