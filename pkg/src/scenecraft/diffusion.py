# -*- coding: utf-8 -*-
"""Noise schedule, training objective and sampler."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

import warnings
from math import sqrt

import torch
from torch.nn import functional as F

from ._internal import (
    ADAPTER,
    BASE,
    BASE_PRETRAIN,
    MOVIE_FINETUNE,
    SPATIAL_FINETUNE,
    STAGES,
    TEMPORAL,
    TEMPORAL_TRAIN,
    acheck,
    consttostr,
)
from .errors import DivergenceError, SamplingError, StageOrderError
from .video_model import parameter_groups

# Parameter group trained and temporal mode per stage
_STAGE_GROUP = {
    BASE_PRETRAIN: BASE,
    SPATIAL_FINETUNE: ADAPTER,
    TEMPORAL_TRAIN: TEMPORAL,
    MOVIE_FINETUNE: ADAPTER,
}
_STAGE_TEMPORAL = {
    BASE_PRETRAIN: False,
    SPATIAL_FINETUNE: False,
    TEMPORAL_TRAIN: True,
    MOVIE_FINETUNE: True,
}


class DiffusionSchedule:
    """
    Noise levels of the forward process.

    alpha_bars has T + 1 entries, alpha_bars[0] is 1 for the clean signal.
    All values are float64.
    """

    __slots__ = "T", "alpha_bars", "betas"

    def __init__(self, betas: torch.Tensor):
        betas = torch.as_tensor(betas, dtype=torch.float64).reshape(-1)
        if betas.numel() < 1:
            raise ValueError("schedule needs at least one step")
        if not ((betas > 0) & (betas < 1)).all():
            raise ValueError("all betas must be in (0, 1)")

        self.T = betas.numel()
        self.betas = betas
        self.alpha_bars = torch.cat(
            (torch.ones(1, dtype=torch.float64), torch.cumprod(1.0 - betas, dim=0))
        )

    def __repr__(self):
        return "DiffusionSchedule(T={0}, beta_min={1:g}, beta_max={2:g})".format(
            self.T, float(self.betas[0]), float(self.betas[-1])
        )


def make_schedule(T=1000, beta_min=1e-4, beta_max=0.02) -> DiffusionSchedule:
    """
    Linear beta schedule.

    :param T: Number of diffusion steps
    :param beta_min: Beta of step 1
    :param beta_max: Beta of step T
    :return: DiffusionSchedule
    """
    acheck(int, T=T)
    if T < 1:
        raise ValueError("T must be >= 1, got {0}".format(T))
    if not 0 < beta_min <= beta_max < 1:
        raise ValueError(
            "need 0 < beta_min <= beta_max < 1, got {0} and {1}".format(beta_min, beta_max)
        )
    return DiffusionSchedule(torch.linspace(beta_min, beta_max, T, dtype=torch.float64))


def _timesteps(t, batch: int, sched: DiffusionSchedule) -> torch.Tensor:
    t = torch.as_tensor(t).reshape(-1)
    if t.is_floating_point() or t.dtype == torch.bool:
        raise TypeError("timesteps must be integers")
    t = t.long()
    if t.numel() == 1:
        t = t.expand(batch)
    if t.numel() != batch:
        raise ValueError("need one timestep per batch item, got {0}".format(t.numel()))
    if (t < 0).any() or (t > sched.T).any():
        raise ValueError("timesteps must be in [0, {0}]".format(sched.T))
    return t


def add_noise(x0: torch.Tensor, t, eps: torch.Tensor, sched: DiffusionSchedule) -> torch.Tensor:
    """
    Forward process x_t = sqrt(ab_t) * x0 + sqrt(1 - ab_t) * eps.

    :param x0: Clean videos [B, ...]
    :param t: Timestep per item in [0, T]
    :param eps: Noise of the shape of x0
    :param sched: Noise schedule
    :return: <class 'torch.Tensor'> noised videos
    """
    if x0.shape != eps.shape:
        raise ValueError(
            "x0 and eps differ in shape: {0} != {1}".format(tuple(x0.shape), tuple(eps.shape))
        )
    t = _timesteps(t, x0.shape[0], sched)
    ab = sched.alpha_bars[t]
    shape = (x0.shape[0],) + (1,) * (x0.dim() - 1)
    a = ab.sqrt().to(x0.dtype).view(shape).to(x0.device)
    b = (1.0 - ab).sqrt().to(x0.dtype).view(shape).to(x0.device)
    return a * x0 + b * eps


def stage_uses_temporal(stage: int) -> bool:
    """True if the stage runs the model with temporal layers enabled."""
    if stage not in _STAGE_TEMPORAL:
        raise ValueError("unknown training stage {0}".format(stage))
    return _STAGE_TEMPORAL[stage]


def trainable_set(model, stage: int) -> dict:
    """
    Parameters optimized in a training stage.

    :param model: VideoDenoiser
    :param stage: BASE_PRETRAIN, SPATIAL_FINETUNE, TEMPORAL_TRAIN or MOVIE_FINETUNE
    :return: <class 'dict'> name -> parameter
    """
    if stage not in _STAGE_GROUP:
        raise ValueError("unknown training stage {0}".format(stage))
    return dict(parameter_groups(model)[_STAGE_GROUP[stage]])


def training_loss(
    model, x0, cond, domain_id, sched: DiffusionSchedule, rng=None, temporal_enabled=True
):
    """
    Noise prediction mean squared error at a random timestep.

    :param model: Callable (x_t, t, cond, domain_id, temporal_enabled=) -> eps_hat
    :param x0: Clean videos [B, F, C, H, W]
    :param cond: Text condition for the model
    :param domain_id: Data domain of the batch
    :param sched: Noise schedule
    :param rng: torch.Generator for t and eps
    :param temporal_enabled: Passed to the model
    :return: <class 'torch.Tensor'> scalar loss
    """
    if not torch.isfinite(x0).all():
        raise ValueError("x0 contains non-finite values")
    b = x0.shape[0]
    t = torch.randint(1, sched.T + 1, (b,), generator=rng)
    eps = torch.randn(x0.shape, generator=rng, dtype=x0.dtype)
    x_t = add_noise(x0, t, eps, sched)
    eps_hat = model(x_t, t, cond, domain_id, temporal_enabled=temporal_enabled)
    loss = F.mse_loss(eps_hat, eps)
    if not torch.isfinite(loss):
        raise DivergenceError("loss is not finite: {0}".format(float(loss)))
    return loss


class SampleConfig:
    """Parameters of one sampling run."""

    __slots__ = "clip_denoised", "domain_id", "guidance_scale", "seed", "steps"

    def __init__(self, steps=25, guidance_scale=3.0, seed=0, domain_id=0, clip_denoised=True):
        acheck(int, steps=steps, seed=seed, domain_id=domain_id)
        if steps < 1:
            raise ValueError("steps must be >= 1, got {0}".format(steps))
        if guidance_scale < 0:
            raise ValueError("guidance_scale must be >= 0, got {0}".format(guidance_scale))
        self.clip_denoised = bool(clip_denoised)
        self.domain_id = domain_id
        self.guidance_scale = float(guidance_scale)
        self.seed = seed
        self.steps = steps


def sampling_timesteps(steps: int, sched: DiffusionSchedule) -> list:
    """Evenly spaced descending timesteps from T down to 1."""
    if not 1 <= steps <= sched.T:
        raise ValueError("sampler steps must be in [1, {0}], got {1}".format(sched.T, steps))
    return [int(v) for v in torch.linspace(sched.T, 1, steps, dtype=torch.float64).round()]


def sample(model, cond, sconf: SampleConfig, sched: DiffusionSchedule, uncond=None):
    """
    Deterministic denoising from seeded noise with text guidance.

    eps = eps_u + s * (eps_c - eps_u); with s == 0 the conditional branch is
    not evaluated at all.

    :param model: VideoDenoiser with temporal layers
    :param cond: Text condition [tokens, D] or [B, tokens, D]
    :param sconf: SampleConfig
    :param sched: Noise schedule
    :param uncond: Empty text condition, zeros of cond's shape if None
    :return: <class 'torch.Tensor'> videos [B, F, C, H, W]
    """
    acheck(SampleConfig, sconf=sconf)
    acheck(DiffusionSchedule, sched=sched)
    if not model.has_temporal:
        raise SamplingError("sampling needs a model with temporal layers")

    cfg = model.config
    batch = cond.shape[0] if cond.dim() == 3 else 1
    if uncond is None:
        uncond = torch.zeros_like(cond)
    if uncond.shape[-2:] != cond.shape[-2:]:
        raise ValueError("uncond must match the shape of cond")

    param = next(model.parameters())
    gen = torch.Generator().manual_seed(sconf.seed)
    x = torch.randn(
        (batch, cfg.frames, cfg.in_channels, cfg.height, cfg.width),
        generator=gen,
        dtype=param.dtype,
    ).to(param.device)
    cond = cond.to(device=param.device, dtype=param.dtype)
    uncond = uncond.to(device=param.device, dtype=param.dtype)

    timesteps = sampling_timesteps(sconf.steps, sched)
    with torch.no_grad():
        for i, t in enumerate(timesteps):
            t_prev = timesteps[i + 1] if i + 1 < len(timesteps) else 0
            tt = torch.full((batch,), t, dtype=torch.long, device=param.device)

            eps = model(x, tt, uncond, sconf.domain_id, temporal_enabled=True)
            if sconf.guidance_scale != 0:
                eps_c = model(x, tt, cond, sconf.domain_id, temporal_enabled=True)
                eps = eps + sconf.guidance_scale * (eps_c - eps)

            ab = float(sched.alpha_bars[t])
            ab_prev = float(sched.alpha_bars[t_prev])
            x0 = (x - sqrt(1.0 - ab) * eps) / sqrt(ab)
            if sconf.clip_denoised:
                x0 = x0.clamp(-1.0, 1.0)
            x = sqrt(ab_prev) * x0 + sqrt(1.0 - ab_prev) * eps

            if not torch.isfinite(x).all():
                raise SamplingError(
                    "non-finite values at sampler step {0} (t={1})".format(i, t)
                )

    if not sconf.clip_denoised and x.abs().max() > 1.5:
        warnings.warn(
            "sampled values leave the data range, max abs {0:.3f}".format(float(x.abs().max())),
            RuntimeWarning,
        )
    return x


def check_stage(model, stage: int) -> None:
    """
    Raise StageOrderError if stage may not run on model now.

    :param model: VideoDenoiser with stage_history
    :param stage: Training stage
    """
    if stage not in STAGES:
        raise ValueError("unknown training stage {0}".format(stage))
    name = consttostr(stage)

    done = [s for s in STAGES if consttostr(s) in model.stage_history]
    if done and stage < max(done):
        raise StageOrderError(
            "stage {0} can not run after {1}".format(name, consttostr(max(done)))
        )
    if stage == BASE_PRETRAIN and model.has_adapters:
        raise StageOrderError("BASE_PRETRAIN is not possible on a model with adapters")
    if stage == SPATIAL_FINETUNE and not model.has_adapters:
        raise StageOrderError("SPATIAL_FINETUNE needs inserted spatial adapters")
    if stage == TEMPORAL_TRAIN and not model.has_temporal:
        raise StageOrderError(
            "TEMPORAL_TRAIN needs temporal layers, insert adapters and temporal layers first"
        )
    if stage == MOVIE_FINETUNE and consttostr(TEMPORAL_TRAIN) not in model.stage_history:
        raise StageOrderError("MOVIE_FINETUNE needs a model trained in TEMPORAL_TRAIN")
