"""Two small neural operators: a spectral-convolution model and a UNet-style
encoder-decoder, both mapping one 2D state to the state a fixed gap later."""

from __future__ import annotations

import torch
import torch.nn as nn

__all__ = ["SpectralOperator2d", "EncoderDecoder2d", "build_model"]


class SpectralConv2d(nn.Module):
    """Learned multiplication on the lowest Fourier modes."""

    def __init__(self, in_channels: int, out_channels: int, modes: int):
        super().__init__()
        self.modes = modes
        scale = 1.0 / (in_channels * out_channels)
        self.w_pos = nn.Parameter(
            scale * torch.randn(in_channels, out_channels, modes, modes,
                                dtype=torch.cfloat)
        )
        self.w_neg = nn.Parameter(
            scale * torch.randn(in_channels, out_channels, modes, modes,
                                dtype=torch.cfloat)
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        batch, _, ny, nx = x.shape
        m = self.modes
        x_hat = torch.fft.rfft2(x)
        out = torch.zeros(
            batch, self.w_pos.shape[1], ny, nx // 2 + 1,
            dtype=torch.cfloat, device=x.device,
        )
        out[:, :, :m, :m] = torch.einsum(
            "bixy,ioxy->boxy", x_hat[:, :, :m, :m], self.w_pos
        )
        out[:, :, -m:, :m] = torch.einsum(
            "bixy,ioxy->boxy", x_hat[:, :, -m:, :m], self.w_neg
        )
        return torch.fft.irfft2(out, s=(ny, nx))


class SpectralOperator2d(nn.Module):
    """Spectral-convolution operator predicting the state increment.

    The residual form makes the freshly initialized model an identity-like
    mapping, which suits the small time gaps between paired states.
    """

    def __init__(self, width: int = 16, modes: int = 8, depth: int = 3):
        super().__init__()
        self.lift = nn.Conv2d(1, width, 1)
        self.spectral = nn.ModuleList(
            SpectralConv2d(width, width, modes) for _ in range(depth)
        )
        self.pointwise = nn.ModuleList(
            nn.Conv2d(width, width, 1) for _ in range(depth)
        )
        self.project = nn.Sequential(
            nn.Conv2d(width, width, 1), nn.GELU(), nn.Conv2d(width, 1, 1)
        )
        # zero-initialized increment: the fresh model is exactly the identity
        nn.init.zeros_(self.project[-1].weight)
        nn.init.zeros_(self.project[-1].bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.lift(x)
        for conv, point in zip(self.spectral, self.pointwise):
            h = torch.nn.functional.gelu(conv(h) + point(h))
        return x + self.project(h)


def _block(cin: int, cout: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(cin, cout, 3, padding=1, padding_mode="circular"),
        nn.GELU(),
        nn.Conv2d(cout, cout, 3, padding=1, padding_mode="circular"),
        nn.GELU(),
    )


class EncoderDecoder2d(nn.Module):
    """Two-level UNet with circular padding, also in residual form."""

    def __init__(self, width: int = 12):
        super().__init__()
        self.enc1 = _block(1, width)
        self.enc2 = _block(width, 2 * width)
        self.bottleneck = _block(2 * width, 2 * width)
        self.up2 = nn.ConvTranspose2d(2 * width, 2 * width, 2, stride=2)
        self.dec2 = _block(4 * width, width)
        self.up1 = nn.ConvTranspose2d(width, width, 2, stride=2)
        self.dec1 = _block(2 * width, width)
        self.head = nn.Conv2d(width, 1, 1)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)
        self.pool = nn.AvgPool2d(2)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        e1 = self.enc1(x)
        e2 = self.enc2(self.pool(e1))
        b = self.bottleneck(self.pool(e2))
        d2 = self.dec2(torch.cat([self.up2(b), e2], dim=1))
        d1 = self.dec1(torch.cat([self.up1(d2), e1], dim=1))
        return x + self.head(d1)


def build_model(kind: str, **kwargs) -> nn.Module:
    if kind == "spectral-operator":
        return SpectralOperator2d(**kwargs)
    if kind == "encoder-decoder":
        return EncoderDecoder2d(**kwargs)
    raise ValueError(f"unknown model kind {kind!r}")
