# -*- coding: utf-8 -*-
"""Building blocks of the video denoiser."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

import torch
from torch import nn
from torch.nn import functional as F


def norm_groups(channels: int, max_groups=8) -> int:
    """
    Biggest group count for GroupNorm which divides the channel count.

    :param channels: Channel count of the normalized feature
    :param max_groups: Upper limit of groups
    :return: <class 'int'> group count
    """
    for groups in range(min(max_groups, channels), 0, -1):
        if channels % groups == 0:
            return groups
    return 1


def sinusoidal_embedding(positions, dim: int, dtype=torch.float64) -> torch.Tensor:
    """
    Interleaved sin/cos embedding of integer positions.

    Component 2k is sin(p * 10000^(-2k/dim)), component 2k+1 the cos of the
    same angle. Used for diffusion timesteps and for frame positions in the
    temporal attention.

    :param positions: Sequence or tensor of positions >= 0
    :param dim: Embedding size, must be even
    :param dtype: Result dtype, the angles are always computed in float64
    :return: <class 'torch.Tensor'> [len(positions), dim]
    """
    if type(dim) != int or dim <= 0 or dim % 2:
        raise ValueError("embedding dim must be a positive even integer, got {0}".format(dim))

    pos = torch.as_tensor(positions).reshape(-1).to(torch.float64)
    if pos.numel() and (pos < 0).any():
        raise ValueError("positions must be >= 0")

    k = torch.arange(dim // 2, dtype=torch.float64, device=pos.device)
    freqs = 10000.0 ** (-2.0 * k / dim)
    angles = pos[:, None] * freqs[None, :]
    emb = torch.stack((torch.sin(angles), torch.cos(angles)), dim=-1)
    return emb.reshape(pos.numel(), dim).to(dtype)


def domain_norm(x: torch.Tensor, domain_id: int, alpha: torch.Tensor, beta: torch.Tensor):
    """
    Domain aware affine map H = X * alpha_i + beta_i.

    The scaler and shifter of domain i are broadcast over all axes except the
    channel axis 1.

    :param x: Feature [N, C, ...]
    :param domain_id: Index of the data domain
    :param alpha: Scalers [n_domains, C]
    :param beta: Shifters [n_domains, C]
    :return: <class 'torch.Tensor'> of same shape as x
    """
    n_domains, channels = alpha.shape
    if beta.shape != alpha.shape:
        raise ValueError("alpha and beta must have the same shape")
    if isinstance(domain_id, bool) or not isinstance(domain_id, int):
        raise TypeError("domain_id must be <class 'int'>")
    if not 0 <= domain_id < n_domains:
        raise ValueError("unknown domain_id {0}, have {1} domains".format(domain_id, n_domains))
    if x.dim() < 2 or x.shape[1] != channels:
        raise ValueError(
            "channel mismatch: feature has shape {0}, parameters have {1} channels"
            "".format(tuple(x.shape), channels)
        )

    shape = (1, channels) + (1,) * (x.dim() - 2)
    return x * alpha[domain_id].view(shape) + beta[domain_id].view(shape)


def zero_module(module: nn.Module) -> nn.Module:
    """Set all parameters of module to zero and return it."""
    for p in module.parameters():
        nn.init.zeros_(p)
    return module


class ForwardContext:
    """Values shared by all layers during one forward pass."""

    __slots__ = "cond", "domain_id", "frames", "temb", "temporal_enabled"

    def __init__(self, temb, cond, domain_id, frames, temporal_enabled):
        self.cond = cond
        self.domain_id = domain_id
        self.frames = frames
        self.temb = temb
        self.temporal_enabled = temporal_enabled


class DomainNorm(nn.Module):
    """Learnable scaler and shifter per data domain, identity at init."""

    def __init__(self, channels: int, n_domains: int):
        super().__init__()
        self.alpha = nn.Parameter(torch.ones(n_domains, channels))
        self.beta = nn.Parameter(torch.zeros(n_domains, channels))

    def forward(self, x, domain_id: int):
        return domain_norm(x, domain_id, self.alpha, self.beta)


class TemporalResBlock(nn.Module):
    """
    Residual block of 1D convolutions along the frame axis.

    Every spatial location is a separate sequence of frames, the convolution
    mixes channels. The last convolution starts at zero.
    """

    def __init__(self, channels: int, kernel_size=3):
        super().__init__()
        self.norm1 = nn.GroupNorm(norm_groups(channels), channels)
        self.conv1 = nn.Conv1d(channels, channels, kernel_size, padding=kernel_size // 2)
        self.norm2 = nn.GroupNorm(norm_groups(channels), channels)
        self.conv2 = zero_module(
            nn.Conv1d(channels, channels, kernel_size, padding=kernel_size // 2)
        )

    def forward(self, h, frames: int):
        nf, c, hh, ww = h.shape
        b = nf // frames

        # [b*f, c, h, w] -> [b*h*w, c, f]
        x = h.reshape(b, frames, c, hh, ww).permute(0, 3, 4, 2, 1).reshape(b * hh * ww, c, frames)
        x = self.conv1(F.silu(self.norm1(x)))
        x = self.conv2(F.silu(self.norm2(x)))
        x = x.reshape(b, hh, ww, c, frames).permute(0, 4, 3, 1, 2).reshape(nf, c, hh, ww)
        return h + x


class TemporalAttention(nn.Module):
    """Self attention over frames with sinusoidal frame positions."""

    def __init__(self, channels: int, heads: int):
        super().__init__()
        self.heads = heads
        self.norm = nn.LayerNorm(channels)
        self.attn = nn.MultiheadAttention(channels, heads, batch_first=True)
        self.proj_out = zero_module(nn.Linear(channels, channels))

    def forward(self, h, frames: int):
        nf, c, hh, ww = h.shape
        b = nf // frames

        # [b*f, c, h, w] -> [b*h*w, f, c]
        x = h.reshape(b, frames, c, hh, ww).permute(0, 3, 4, 1, 2).reshape(b * hh * ww, frames, c)
        pos = sinusoidal_embedding(torch.arange(frames, device=h.device), c, dtype=h.dtype)
        y = self.norm(x + pos[None])
        y = self.attn(y, y, y, need_weights=False)[0]
        y = self.proj_out(y)
        y = y.reshape(b, hh, ww, frames, c).permute(0, 3, 4, 1, 2).reshape(nf, c, hh, ww)
        return h + y


class ResBlock(nn.Module):
    """
    Spatial residual block with timestep injection.

    With n_domains > 0 this is the modified block of an adapter unit: the
    affine stage of the first normalization is replaced by a DomainNorm.
    """

    def __init__(
        self, in_channels: int, out_channels: int, temb_dim: int, n_domains=0, zero_out=False
    ):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels

        self.norm1 = nn.GroupNorm(norm_groups(in_channels), in_channels, affine=n_domains == 0)
        self.domain_norm = DomainNorm(in_channels, n_domains) if n_domains else None
        self.conv1 = nn.Conv2d(in_channels, out_channels, 3, padding=1)
        self.temb_proj = nn.Linear(temb_dim, out_channels)
        self.norm2 = nn.GroupNorm(norm_groups(out_channels), out_channels)
        self.conv2 = nn.Conv2d(out_channels, out_channels, 3, padding=1)
        if zero_out:
            zero_module(self.conv2)

        if in_channels == out_channels:
            self.skip = nn.Identity()
        else:
            self.skip = nn.Conv2d(in_channels, out_channels, 1)

        # Set by insert_temporal_layers
        self.temporal = None

    def forward(self, h, ctx: ForwardContext):
        x = self.norm1(h)
        if self.domain_norm is not None:
            x = self.domain_norm(x, ctx.domain_id)
        x = self.conv1(F.silu(x))
        x = x + self.temb_proj(F.silu(ctx.temb))[:, :, None, None]
        x = self.conv2(F.silu(self.norm2(x)))
        h = self.skip(h) + x

        if self.temporal is not None and ctx.temporal_enabled:
            h = self.temporal(h, ctx.frames)
        return h


class SpatialAttention(nn.Module):
    """Self attention over pixels plus text cross attention and feed forward."""

    def __init__(self, channels: int, cond_dim: int, heads: int, zero_out=False):
        super().__init__()
        if channels % heads:
            raise ValueError(
                "channels {0} can not be split into {1} attention heads".format(channels, heads)
            )
        self.channels = channels
        self.heads = heads

        self.norm = nn.GroupNorm(norm_groups(channels), channels)
        self.proj_in = nn.Linear(channels, channels)
        self.norm_self = nn.LayerNorm(channels)
        self.attn_self = nn.MultiheadAttention(channels, heads, batch_first=True)
        self.norm_cross = nn.LayerNorm(channels)
        self.attn_cross = nn.MultiheadAttention(
            channels, heads, kdim=cond_dim, vdim=cond_dim, batch_first=True
        )
        self.norm_ff = nn.LayerNorm(channels)
        self.ff = nn.Sequential(
            nn.Linear(channels, 4 * channels),
            nn.GELU(),
            nn.Linear(4 * channels, channels),
        )
        self.proj_out = nn.Linear(channels, channels)
        if zero_out:
            zero_module(self.proj_out)

        # Set by insert_temporal_layers
        self.temporal = None

    def forward(self, h, ctx: ForwardContext):
        n, c, hh, ww = h.shape

        x = self.norm(h).flatten(2).transpose(1, 2)
        x = self.proj_in(x)
        y = self.norm_self(x)
        x = x + self.attn_self(y, y, y, need_weights=False)[0]
        y = self.norm_cross(x)
        x = x + self.attn_cross(y, ctx.cond, ctx.cond, need_weights=False)[0]
        x = x + self.ff(self.norm_ff(x))
        x = self.proj_out(x).transpose(1, 2).reshape(n, c, hh, ww)
        h = h + x

        if self.temporal is not None and ctx.temporal_enabled:
            h = self.temporal(h, ctx.frames)
        return h


class AdapterUnit(nn.Module):
    """Modified ResBlock with domain norm followed by an attention layer."""

    def __init__(self, channels: int, temb_dim: int, cond_dim: int, heads: int, n_domains: int):
        super().__init__()
        self.res = ResBlock(channels, channels, temb_dim, n_domains=n_domains, zero_out=True)
        self.attn = SpatialAttention(channels, cond_dim, heads, zero_out=True)

    def forward(self, h, ctx: ForwardContext):
        return self.attn(self.res(h, ctx), ctx)


class Downsample(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv2d(channels, channels, 3, stride=2, padding=1)

    def forward(self, h):
        return self.conv(h)


class Upsample(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, h):
        return self.conv(F.interpolate(h, scale_factor=2, mode="nearest"))


class DownBlock(nn.Module):
    """One encoder level: ResBlock, optional attention, optional downsampling."""

    def __init__(self, in_channels, out_channels, temb_dim, cond_dim, heads, with_attn, downsample):
        super().__init__()
        self.in_channels = in_channels
        self.heads = heads
        self.res = ResBlock(in_channels, out_channels, temb_dim)
        self.attn = SpatialAttention(out_channels, cond_dim, heads) if with_attn else None
        self.down = Downsample(out_channels) if downsample else None

        # Set by insert_spatial_adapters
        self.adapter = None

    def forward(self, h, ctx: ForwardContext):
        if self.adapter is not None:
            h = self.adapter(h, ctx)
        h = self.res(h, ctx)
        if self.attn is not None:
            h = self.attn(h, ctx)
        skip = h
        if self.down is not None:
            h = self.down(h)
        return h, skip


class MidBlock(nn.Module):
    def __init__(self, channels, temb_dim, cond_dim, heads):
        super().__init__()
        self.res1 = ResBlock(channels, channels, temb_dim)
        self.attn = SpatialAttention(channels, cond_dim, heads)
        self.res2 = ResBlock(channels, channels, temb_dim)

    def forward(self, h, ctx: ForwardContext):
        return self.res2(self.attn(self.res1(h, ctx), ctx), ctx)


class UpBlock(nn.Module):
    """One decoder level: skip concat, ResBlock, optional attention and upsampling."""

    def __init__(
        self,
        in_channels,
        skip_channels,
        out_channels,
        temb_dim,
        cond_dim,
        heads,
        with_attn,
        upsample,
    ):
        super().__init__()
        self.in_channels = in_channels
        self.heads = heads
        self.res = ResBlock(in_channels + skip_channels, out_channels, temb_dim)
        self.attn = SpatialAttention(out_channels, cond_dim, heads) if with_attn else None
        self.up = Upsample(out_channels) if upsample else None

        # Set by insert_spatial_adapters
        self.adapter = None

    def forward(self, h, skip, ctx: ForwardContext):
        if self.adapter is not None:
            h = self.adapter(h, ctx)
        h = self.res(torch.cat((h, skip), dim=1), ctx)
        if self.attn is not None:
            h = self.attn(h, ctx)
        if self.up is not None:
            h = self.up(h)
        return h
