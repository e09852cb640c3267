# -*- coding: utf-8 -*-
"""Video denoiser with spatial adapters and temporal layers."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

from collections import OrderedDict

import torch
from torch import nn
from torch.nn import functional as F

from ._internal import ADAPTER, BASE, GROUPS, TEMPORAL, acheck, consttostr, strtoconst
from .errors import StageOrderError
from .layers import (
    AdapterUnit,
    DownBlock,
    ForwardContext,
    MidBlock,
    ResBlock,
    SpatialAttention,
    TemporalAttention,
    TemporalResBlock,
    UpBlock,
    norm_groups,
    sinusoidal_embedding,
)

CHECKPOINT_FORMAT = 1


class ModelConfig:
    """Dimensions of the toy video denoiser."""

    __slots__ = (
        "attn_heads",
        "attn_levels",
        "base_channels",
        "channel_mults",
        "frames",
        "height",
        "in_channels",
        "n_domains",
        "text_embed_dim",
        "time_embed_dim",
        "width",
    )

    def __init__(
        self,
        in_channels=3,
        base_channels=32,
        channel_mults=(1, 2),
        frames=8,
        height=8,
        width=16,
        n_domains=2,
        text_embed_dim=32,
        time_embed_dim=64,
        attn_levels=None,
        attn_heads=4,
    ):
        """
        Validate and store the model dimensions.

        :param attn_levels: Level indexes with attention, None for the lowest
                            resolution only
        """
        for name, value in (
            ("in_channels", in_channels),
            ("base_channels", base_channels),
            ("frames", frames),
            ("height", height),
            ("width", width),
            ("n_domains", n_domains),
            ("text_embed_dim", text_embed_dim),
            ("time_embed_dim", time_embed_dim),
            ("attn_heads", attn_heads),
        ):
            if type(value) != int:
                raise TypeError("{0} must be <class 'int'>".format(name))
            if value < 1:
                raise ValueError("{0} must be positive, got {1}".format(name, value))

        channel_mults = tuple(channel_mults)
        if not channel_mults or any(type(m) != int or m < 1 for m in channel_mults):
            raise ValueError("channel_mults must be a non empty list of positive integers")
        if frames < 2:
            raise ValueError("frames must be >= 2, got {0}".format(frames))
        if width < height:
            raise ValueError(
                "frame must be landscape, got height {0} and width {1}".format(height, width)
            )
        if base_channels % 2:
            raise ValueError("base_channels must be even for the timestep embedding")

        factor = 2 ** (len(channel_mults) - 1)
        if height % factor or width % factor:
            raise ValueError(
                "height and width must be divisible by {0} for {1} levels"
                "".format(factor, len(channel_mults))
            )
        for mult in channel_mults:
            channels = base_channels * mult
            if channels % attn_heads:
                raise ValueError(
                    "{0} channels can not be split into {1} attention heads"
                    "".format(channels, attn_heads)
                )

        if attn_levels is None:
            attn_levels = (len(channel_mults) - 1,)
        attn_levels = tuple(sorted(set(attn_levels)))
        for level in attn_levels:
            if type(level) != int or not 0 <= level < len(channel_mults):
                raise ValueError("attention level {0} does not exist".format(level))

        self.attn_heads = attn_heads
        self.attn_levels = attn_levels
        self.base_channels = base_channels
        self.channel_mults = channel_mults
        self.frames = frames
        self.height = height
        self.in_channels = in_channels
        self.n_domains = n_domains
        self.text_embed_dim = text_embed_dim
        self.time_embed_dim = time_embed_dim
        self.width = width

    def __eq__(self, other):
        return isinstance(other, ModelConfig) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return "ModelConfig({0})".format(
            ", ".join("{0}={1!r}".format(k, v) for k, v in self.to_dict().items())
        )

    def to_dict(self) -> dict:
        rc = OrderedDict()
        for name in self.__slots__:
            value = getattr(self, name)
            rc[name] = list(value) if isinstance(value, tuple) else value
        return rc

    @classmethod
    def from_dict(cls, values: dict):
        return cls(**values)


def group_of(name: str) -> int:
    """
    Parameter group of a parameter by its stable name.

    Temporal layers hang below an attribute 'temporal', adapter units below
    an attribute 'adapter'. Everything else is the frozen base.

    :param name: Name as given by named_parameters()
    :return: BASE, ADAPTER or TEMPORAL
    """
    parts = name.split(".")
    if "temporal" in parts:
        return TEMPORAL
    if "adapter" in parts:
        return ADAPTER
    return BASE


class VideoDenoiser(nn.Module):
    """
    Per frame image U-Net which predicts the noise of a video.

    The frame axis is folded into the batch axis. After insert_temporal_layers
    every spatial layer carries a temporal layer, which mixes information
    across frames while temporal_enabled is True.
    """

    def __init__(self, config: ModelConfig, seed=0):
        super().__init__()
        acheck(ModelConfig, config=config)
        self.config = config
        self.seed = seed
        self.stage_history = []

        base = config.base_channels
        temb_dim = config.time_embed_dim
        cond_dim = config.text_embed_dim
        heads = config.attn_heads
        levels = len(config.channel_mults)
        channels = [base * m for m in config.channel_mults]

        self.time_mlp = nn.Sequential(
            nn.Linear(base, temb_dim),
            nn.SiLU(),
            nn.Linear(temb_dim, temb_dim),
        )
        self.conv_in = nn.Conv2d(config.in_channels, base, 3, padding=1)

        self.down_blocks = nn.ModuleList()
        ch_in = base
        for level, ch_out in enumerate(channels):
            self.down_blocks.append(
                DownBlock(
                    ch_in,
                    ch_out,
                    temb_dim,
                    cond_dim,
                    heads,
                    with_attn=level in config.attn_levels,
                    downsample=level < levels - 1,
                )
            )
            ch_in = ch_out

        self.mid_block = MidBlock(ch_in, temb_dim, cond_dim, heads)

        self.up_blocks = nn.ModuleList()
        for level in reversed(range(levels)):
            ch_out = channels[level]
            self.up_blocks.append(
                UpBlock(
                    ch_in,
                    channels[level],
                    ch_out,
                    temb_dim,
                    cond_dim,
                    heads,
                    with_attn=level in config.attn_levels,
                    upsample=level > 0,
                )
            )
            ch_in = ch_out

        self.norm_out = nn.GroupNorm(norm_groups(ch_in), ch_in)
        self.conv_out = nn.Conv2d(ch_in, config.in_channels, 3, padding=1)

    def _get_has_adapters(self) -> bool:
        return any(block.adapter is not None for block in self.blocks())

    def _get_has_temporal(self) -> bool:
        return any(
            m.temporal is not None
            for m in self.modules()
            if isinstance(m, (ResBlock, SpatialAttention))
        )

    def blocks(self) -> list:
        """All Down and Up blocks, the insertion sites of adapters."""
        return list(self.down_blocks) + list(self.up_blocks)

    def forward(self, x, t, cond, domain_id=0, temporal_enabled=True):
        """
        Predict the noise of x at timestep t.

        :param x: Video [B, F, C, H, W]
        :param t: Timestep per batch item, int or tensor [B]
        :param cond: Text condition [tokens, D] or [B, tokens, D]
        :param domain_id: Data domain for the adapter normalization
        :param temporal_enabled: False processes every frame on its own
        :return: <class 'torch.Tensor'> predicted noise, shape of x
        """
        cfg = self.config
        if x.dim() != 5:
            raise ValueError("x must be [batch, frames, channels, height, width]")
        b, f, c, h, w = x.shape
        if (c, h, w) != (cfg.in_channels, cfg.height, cfg.width):
            raise ValueError(
                "frame shape {0} does not match model {1}".format(
                    (c, h, w), (cfg.in_channels, cfg.height, cfg.width)
                )
            )
        if self.has_temporal and temporal_enabled and f != cfg.frames:
            raise ValueError("video mode needs {0} frames, got {1}".format(cfg.frames, f))
        if isinstance(domain_id, bool) or not isinstance(domain_id, int):
            raise TypeError("domain_id must be <class 'int'>")
        if not 0 <= domain_id < cfg.n_domains:
            raise ValueError("unknown domain_id {0}".format(domain_id))

        t = torch.as_tensor(t, device=x.device).reshape(-1)
        if t.numel() == 1:
            t = t.expand(b)
        if t.numel() != b:
            raise ValueError("need one timestep per batch item")
        if (t < 0).any():
            raise ValueError("timesteps must be >= 0")

        if cond.dim() == 2:
            cond = cond.unsqueeze(0).expand(b, -1, -1)
        if cond.dim() != 3 or cond.shape[0] != b or cond.shape[2] != cfg.text_embed_dim:
            raise ValueError(
                "cond must be [tokens, {0}] or [batch, tokens, {0}]".format(cfg.text_embed_dim)
            )
        if cond.shape[1] < 1:
            raise ValueError("cond needs at least one token")

        # Fold frames into the batch
        hx = x.reshape(b * f, c, h, w)
        t_frames = t.repeat_interleave(f)
        cond_frames = cond.to(x.dtype).repeat_interleave(f, dim=0)
        temb = self.time_mlp(sinusoidal_embedding(t_frames, cfg.base_channels, dtype=x.dtype))
        ctx = ForwardContext(temb, cond_frames, domain_id, f, temporal_enabled)

        hx = self.conv_in(hx)
        skips = []
        for block in self.down_blocks:
            hx, skip = block(hx, ctx)
            skips.append(skip)
        hx = self.mid_block(hx, ctx)
        for block in self.up_blocks:
            hx = block(hx, skips.pop(), ctx)
        hx = self.conv_out(F.silu(self.norm_out(hx)))

        return hx.reshape(b, f, c, h, w)

    has_adapters = property(_get_has_adapters)
    has_temporal = property(_get_has_temporal)


def build_base_model(config: ModelConfig, seed: int) -> VideoDenoiser:
    """
    Build the seeded image U-Net backbone.

    The global torch random state is left untouched.

    :param config: Model dimensions
    :param seed: Seed of the parameter init
    :return: VideoDenoiser with BASE parameters only
    """
    acheck(ModelConfig, config=config)
    acheck(int, seed=seed)
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        return VideoDenoiser(config, seed)


def _check_config(model: VideoDenoiser, config: ModelConfig):
    acheck(VideoDenoiser, model=model)
    acheck(ModelConfig, config=config)
    if config != model.config:
        raise ValueError("config does not match the config of the model")


def insert_spatial_adapters(model: VideoDenoiser, config: ModelConfig) -> VideoDenoiser:
    """
    Insert one adapter unit before every Down and Up block.

    Each unit copies channel count and attention heads of its block. The
    outputs of the units start at zero, so the model function is unchanged.

    :param model: Model without adapters
    :param config: Config of the model
    :return: The same model object
    """
    _check_config(model, config)
    if model.has_adapters:
        raise StageOrderError("spatial adapters are already inserted")
    if model.has_temporal:
        raise StageOrderError("temporal layers exist, adapters must come first")

    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(model.seed + 1)
        for block in model.blocks():
            block.adapter = AdapterUnit(
                block.in_channels,
                config.time_embed_dim,
                config.text_embed_dim,
                block.heads,
                config.n_domains,
            )
    return model


def insert_temporal_layers(model: VideoDenoiser, config: ModelConfig) -> VideoDenoiser:
    """
    Attach a temporal layer after every spatial ResBlock and attention.

    :param model: Model with spatial adapters
    :param config: Config of the model
    :return: The same model object
    """
    _check_config(model, config)
    if not model.has_adapters:
        raise StageOrderError("spatial adapters must be inserted before temporal layers")
    if model.has_temporal:
        raise StageOrderError("temporal layers are already inserted")

    sites = [m for m in model.modules() if isinstance(m, (ResBlock, SpatialAttention))]
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(model.seed + 2)
        for site in sites:
            if isinstance(site, ResBlock):
                site.temporal = TemporalResBlock(site.out_channels)
            else:
                site.temporal = TemporalAttention(site.channels, site.heads)
    return model


def parameter_groups(model: nn.Module) -> dict:
    """
    Partition all parameters into BASE, ADAPTER and TEMPORAL.

    :param model: VideoDenoiser
    :return: <class 'dict'> group -> OrderedDict(name -> parameter)
    """
    rc = {group: OrderedDict() for group in GROUPS}
    for name, param in model.named_parameters():
        rc[group_of(name)][name] = param
    return rc


def save_checkpoint(model: VideoDenoiser, path: str, ema=None) -> dict:
    """
    Write parameters, header and optional EMA state to one archive.

    :param model: Model to save
    :param path: Target file
    :param ema: Optional dict name -> tensor with averaged parameters
    :return: <class 'dict'> the written header
    """
    acheck(VideoDenoiser, model=model)
    header = {
        "format_version": CHECKPOINT_FORMAT,
        "config": model.config.to_dict(),
        "seed": model.seed,
        "stage_history": list(model.stage_history),
        "groups": {name: consttostr(group_of(name)) for name, _ in model.named_parameters()},
        "has_adapters": model.has_adapters,
        "has_temporal": model.has_temporal,
    }
    state = OrderedDict((k, v.detach().cpu().clone()) for k, v in model.state_dict().items())
    ema_state = OrderedDict((k, v.detach().cpu().clone()) for k, v in (ema or {}).items())
    torch.save({"header": header, "state": state, "ema": ema_state}, path)
    return header


def load_checkpoint(path: str, use_ema=False):
    """
    Rebuild a model from a checkpoint archive.

    :param path: Checkpoint file
    :param use_ema: Replace trained parameters by their averaged values
    :return: <class 'tuple'> (VideoDenoiser, header)
    """
    archive = torch.load(path, map_location="cpu", weights_only=True)
    try:
        header = archive["header"]
        state = archive["state"]
    except (KeyError, TypeError):
        raise ValueError("file '{0}' is not a scenecraft checkpoint".format(path))
    if header.get("format_version") != CHECKPOINT_FORMAT:
        raise ValueError(
            "unsupported checkpoint format {0}".format(header.get("format_version"))
        )

    config = ModelConfig.from_dict(header["config"])
    model = build_base_model(config, header["seed"])
    if header["has_adapters"]:
        insert_spatial_adapters(model, config)
    if header["has_temporal"]:
        insert_temporal_layers(model, config)
    model.load_state_dict(state, strict=True)
    model.stage_history = list(header["stage_history"])

    for name, group_name in header["groups"].items():
        if group_of(name) != strtoconst(group_name):
            raise ValueError("group of parameter '{0}' changed".format(name))

    if use_ema and archive.get("ema"):
        params = dict(model.named_parameters())
        with torch.no_grad():
            for name, value in archive["ema"].items():
                params[name].copy_(value)

    return model, header


class FrameCodec:
    """
    Per frame encode/decode pair between pixel and model space.

    The base class is the identity. Training encodes the clips before
    noising, sampling decodes the denoised result. Subclasses keep the
    shape [..., C, H, W] of the model config.
    """

    name = "identity"

    def encode(self, frames: torch.Tensor) -> torch.Tensor:
        return frames

    def decode(self, latents: torch.Tensor) -> torch.Tensor:
        return latents

    def roundtrip_error(self, frames: torch.Tensor) -> float:
        """Biggest absolute deviation of decode(encode(frames))."""
        return float((self.decode(self.encode(frames)) - frames).abs().max())

    def describe(self) -> dict:
        """Name and settings for manifests and run records."""
        return {"name": self.name}


class ScaledCodec(FrameCodec):
    """
    Multiplies pixels by a constant factor, decode divides again.

    A factor up to 1 keeps latents of pixels in [-1, 1] inside the clamp
    range of the sampler.
    """

    name = "scaled"

    def __init__(self, scale=1.0):
        if not (isinstance(scale, (int, float)) and 0.0 < scale <= 1.0):
            raise ValueError("codec scale must be in (0, 1], got {0}".format(scale))
        self.scale = float(scale)

    def encode(self, frames: torch.Tensor) -> torch.Tensor:
        return frames * self.scale

    def decode(self, latents: torch.Tensor) -> torch.Tensor:
        return latents / self.scale

    def describe(self) -> dict:
        return {"name": self.name, "scale": self.scale}


def codec_from_config(cfg) -> FrameCodec:
    """Create the frame codec named by [model] codec."""
    name = cfg.get("model", "codec")
    if name == "identity":
        return FrameCodec()
    if name == "scaled":
        return ScaledCodec(cfg.get("model", "codec_scale"))
    raise ValueError("unknown frame codec '{0}'".format(name))
