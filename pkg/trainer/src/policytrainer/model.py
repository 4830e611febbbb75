"""One hourglass module mapping observations to 4-channel action heatmaps."""

from __future__ import annotations

import torch
from torch import nn

from .dpi import HEATMAP_SIZE, INPUT_CHANNELS


def _block(cin: int, cout: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(cin, cout, 3, padding=1),
        nn.BatchNorm2d(cout),
        nn.ReLU(inplace=True),
        nn.Conv2d(cout, cout, 3, padding=1),
        nn.BatchNorm2d(cout),
        nn.ReLU(inplace=True),
    )


class HourglassNet(nn.Module):
    """Strided stem down to the heatmap resolution, then an encoder-decoder
    with skip connections at 64, 32 and 16 pixels and a linear 4-channel head.
    """

    def __init__(self, base_channels: int = 24):
        super().__init__()
        c = base_channels
        self.stem = nn.Sequential(
            nn.Conv2d(INPUT_CHANNELS, c, 7, stride=2, padding=3),
            nn.BatchNorm2d(c),
            nn.ReLU(inplace=True),
            nn.Conv2d(c, c, 3, stride=2, padding=1),
            nn.BatchNorm2d(c),
            nn.ReLU(inplace=True),
        )
        self.enc64 = _block(c, c)
        self.enc32 = _block(c, 2 * c)
        self.enc16 = _block(2 * c, 4 * c)
        self.pool = nn.MaxPool2d(2)
        self.up16 = nn.ConvTranspose2d(4 * c, 2 * c, 2, stride=2)
        self.dec32 = _block(4 * c, 2 * c)
        self.up32 = nn.ConvTranspose2d(2 * c, c, 2, stride=2)
        self.dec64 = _block(2 * c, c)
        self.head = nn.Conv2d(c, 4, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.stem(x)
        s64 = self.enc64(h)
        s32 = self.enc32(self.pool(s64))
        s16 = self.enc16(self.pool(s32))
        d32 = self.dec32(torch.cat([self.up16(s16), s32], dim=1))
        d64 = self.dec64(torch.cat([self.up32(d32), s64], dim=1))
        out = self.head(d64)
        assert out.shape[-2:] == (HEATMAP_SIZE, HEATMAP_SIZE)
        return out
