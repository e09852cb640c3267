# -*- coding: utf-8 -*-
"""Stage wise training loop with frozen parameter groups."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

import json
import random
import warnings

import torch

from ._internal import GROUPS, STAGES, TEMPORAL_TRAIN, acheck, consttostr
from .dataset import BatchIterator, BatchPrefetcher, ClipDataset
from .diffusion import (
    DiffusionSchedule,
    check_stage,
    stage_uses_temporal,
    trainable_set,
    training_loss,
)
from .errors import DivergenceError
from .textenc import StubTextEncoder, TextEncoder
from .video_model import FrameCodec, VideoDenoiser, group_of, save_checkpoint


class TrainConfig:
    """Hyper parameters of one training stage."""

    __slots__ = (
        "augment",
        "batch",
        "ema_decay",
        "learning_rate",
        "prefetch",
        "seed",
        "smoothing",
        "stage",
        "steps",
        "temporal_domain",
        "uncond_prob",
    )

    def __init__(
        self,
        stage: int,
        steps=200,
        batch=4,
        learning_rate=1e-3,
        seed=0,
        ema_decay=0.999,
        uncond_prob=0.1,
        temporal_domain=0,
        smoothing=0.9,
        prefetch=2,
        augment=False,
    ):
        acheck(int, steps=steps, batch=batch, seed=seed, temporal_domain=temporal_domain)
        if stage not in STAGES:
            raise ValueError("unknown training stage {0}".format(stage))
        if steps < 1:
            raise ValueError("steps must be >= 1, got {0}".format(steps))
        if batch < 1:
            raise ValueError("batch must be >= 1, got {0}".format(batch))
        if not learning_rate > 0:
            raise ValueError("learning_rate must be > 0, got {0}".format(learning_rate))
        if not 0 < ema_decay < 1:
            raise ValueError("ema_decay must be in (0, 1), got {0}".format(ema_decay))
        if not 0 <= uncond_prob < 1:
            raise ValueError("uncond_prob must be in [0, 1), got {0}".format(uncond_prob))
        if not 0 <= smoothing < 1:
            raise ValueError("smoothing must be in [0, 1), got {0}".format(smoothing))
        self.augment = bool(augment)
        self.batch = batch
        self.ema_decay = float(ema_decay)
        self.learning_rate = float(learning_rate)
        self.prefetch = int(prefetch)
        self.seed = seed
        self.smoothing = float(smoothing)
        self.stage = stage
        self.steps = steps
        self.temporal_domain = temporal_domain
        self.uncond_prob = float(uncond_prob)


class ParameterEMA:
    """
    Exponential moving average of a set of parameters.

    The decay warms up as min(decay, (1 + n) / (10 + n)) after n updates.
    """

    __slots__ = "decay", "shadow", "updates"

    def __init__(self, params: dict, decay: float):
        self.decay = decay
        self.shadow = {name: p.detach().clone() for name, p in params.items()}
        self.updates = 0

    def update(self, params: dict) -> None:
        self.updates += 1
        d = min(self.decay, (1.0 + self.updates) / (10.0 + self.updates))
        with torch.no_grad():
            for name, p in params.items():
                self.shadow[name].mul_(d).add_(p.detach(), alpha=1.0 - d)

    def state_dict(self) -> dict:
        return dict(self.shadow)


class TrainReport:
    """Result of one training stage."""

    __slots__ = (
        "census",
        "checkpoint",
        "codec_error",
        "ema",
        "losses",
        "metrics_log",
        "smoothed_losses",
        "stage",
    )

    def __init__(
        self,
        stage,
        losses,
        smoothed_losses,
        census,
        ema,
        checkpoint="",
        metrics_log="",
        codec_error=0.0,
    ):
        self.census = census
        self.checkpoint = checkpoint
        self.codec_error = codec_error
        self.ema = ema
        self.losses = losses
        self.metrics_log = metrics_log
        self.smoothed_losses = smoothed_losses
        self.stage = stage

    def changed_groups(self) -> set:
        """Names of the parameter groups with at least one changed tensor."""
        return {group for group, names in self.census.items() if names}


def parameter_census(before: dict, model) -> dict:
    """
    Changed parameters per group since a snapshot.

    :param before: dict name -> tensor copy
    :param model: Model to compare
    :return: <class 'dict'> group name -> sorted list of changed names
    """
    rc = {consttostr(group): [] for group in GROUPS}
    for name, p in model.named_parameters():
        if not torch.equal(before[name], p.detach()):
            rc[consttostr(group_of(name))].append(name)
    for names in rc.values():
        names.sort()
    return rc


def train(
    model: VideoDenoiser,
    dataset: ClipDataset,
    tconf: TrainConfig,
    sched: DiffusionSchedule,
    encoder=None,
    checkpoint="",
    metrics_log="",
    codec=None,
) -> TrainReport:
    """
    Optimize the trainable parameter group of a stage.

    All other parameters get requires_grad False and stay untouched to the
    byte. The stage is appended to model.stage_history on success.

    :param model: VideoDenoiser in a state legal for the stage
    :param dataset: ClipDataset with frames shaped for the model
    :param tconf: TrainConfig
    :param sched: Noise schedule
    :param encoder: TextEncoder, stub encoder of the model dims if None
    :param checkpoint: Write a checkpoint to this file if given
    :param metrics_log: Write json lines metrics to this file if given
    :param codec: FrameCodec applied to the clips before noising, identity if None
    :return: TrainReport
    """
    acheck(VideoDenoiser, model=model)
    acheck(ClipDataset, dataset=dataset)
    acheck(TrainConfig, tconf=tconf)
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    check_stage(model, tconf.stage)

    if encoder is None:
        encoder = StubTextEncoder(dim=model.config.text_embed_dim)
    acheck(TextEncoder, encoder=encoder)
    if codec is None:
        codec = FrameCodec()
    acheck(FrameCodec, codec=codec)

    stage = tconf.stage
    stage_name = consttostr(stage)
    temporal_enabled = stage_uses_temporal(stage)
    frames = dataset[0].frames.shape[0]
    if temporal_enabled and frames != model.config.frames:
        raise ValueError(
            "{0} needs clips of {1} frames, dataset has {2}".format(
                stage_name, model.config.frames, frames
            )
        )
    if stage == TEMPORAL_TRAIN and not 0 <= tconf.temporal_domain < model.config.n_domains:
        raise ValueError("temporal_domain {0} does not exist".format(tconf.temporal_domain))
    for d in dataset.domains():
        if d >= model.config.n_domains:
            raise ValueError("dataset domain {0} is unknown to the model".format(d))

    with torch.no_grad():
        codec_error = codec.roundtrip_error(dataset[0].frames)

    selection = trainable_set(model, stage)
    if not selection:
        raise ValueError("stage {0} has no parameters to train".format(stage_name))
    for name, p in model.named_parameters():
        p.requires_grad_(name in selection)

    snapshot = {name: p.detach().clone() for name, p in model.named_parameters()}
    optimizer = torch.optim.AdamW(
        list(selection.values()), lr=tconf.learning_rate, weight_decay=0.0
    )
    ema = ParameterEMA(selection, tconf.ema_decay)
    gen = torch.Generator().manual_seed(tconf.seed)
    dropout = random.Random(tconf.seed)

    batches = BatchIterator(dataset, tconf.batch, tconf.seed, tconf.augment)
    prefetcher = None
    if tconf.prefetch > 0:
        prefetcher = BatchPrefetcher(batches, tconf.prefetch)
        prefetcher.start()
        source = prefetcher
    else:
        source = iter(batches)

    losses = []
    smoothed = []
    running = 0.0
    fh = open(metrics_log, "w") if metrics_log else None
    model.train()
    try:
        for step in range(tconf.steps):
            batch = next(source)
            domain_id = tconf.temporal_domain if stage == TEMPORAL_TRAIN else batch.domain_id
            captions = [
                "" if dropout.random() < tconf.uncond_prob else caption
                for caption in batch.captions
            ]
            cond = encoder.encode_batch(captions)
            with torch.no_grad():
                x0 = codec.encode(batch.frames)

            try:
                loss = training_loss(model, x0, cond, domain_id, sched, gen, temporal_enabled)
            except DivergenceError as e:
                raise DivergenceError(
                    "training diverged at step {0} of stage {1} | {2}".format(step, stage_name, e)
                )

            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            optimizer.step()
            ema.update(selection)

            value = float(loss)
            running = tconf.smoothing * running + (1.0 - tconf.smoothing) * value
            losses.append(value)
            smoothed.append(running / (1.0 - tconf.smoothing ** (step + 1)))

            if fh:
                fh.write(
                    json.dumps(
                        {
                            "step": step,
                            "stage": stage_name,
                            "loss": value,
                            "smoothed_loss": smoothed[-1],
                            "learning_rate": tconf.learning_rate,
                            "domain_id": domain_id,
                        }
                    )
                    + "\n"
                )
    finally:
        if prefetcher is not None:
            prefetcher.stop()
        for p in model.parameters():
            p.requires_grad_(True)
        model.eval()

        census = parameter_census(snapshot, model)
        if fh:
            fh.write(
                json.dumps(
                    {
                        "event": "codec",
                        "stage": stage_name,
                        "codec": codec.describe(),
                        "roundtrip_error": codec_error,
                    }
                )
                + "\n"
            )
            fh.write(json.dumps({"event": "census", "stage": stage_name, "changed": census}) + "\n")
            fh.close()

    trained = {consttostr(group_of(name)) for name in selection}
    leaked = [g for g, names in census.items() if names and g not in trained]
    if leaked:
        warnings.warn(
            "parameters outside the trainable set changed in {0}".format(", ".join(leaked)),
            RuntimeWarning,
        )

    model.stage_history.append(stage_name)
    if checkpoint:
        save_checkpoint(model, checkpoint, ema.state_dict())

    return TrainReport(
        stage_name,
        losses,
        smoothed,
        census,
        ema.state_dict(),
        checkpoint,
        metrics_log,
        codec_error,
    )
