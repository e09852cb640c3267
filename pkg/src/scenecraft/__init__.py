# -*- coding: utf-8 -*-
"""
Desk scale text to movie pipeline.

A user brief is expanded into scene scripts by a text expansion client.
A frozen image diffusion backbone, extended by zero initialized spatial
adapters with domain normalization and by temporal layers, samples one clip
per scene. Sound effects are retrieved by text and video similarity, one
background track follows the tone of the plot. The scenes are assembled as
hard cuts and exported with a manifest.
"""
__all__ = [
    "BASE_PRETRAIN",
    "SPATIAL_FINETUNE",
    "TEMPORAL_TRAIN",
    "MOVIE_FINETUNE",
    "BASE",
    "ADAPTER",
    "TEMPORAL",
    "SFX",
    "MUSIC",
    "STAGES",
    "GROUPS",
    "KINDS",
    "TONES",
    "consttostr",
    "strtoconst",
    "set_debug",
    "PipelineConfig",
    "load_config",
    "UserBrief",
    "SceneScript",
    "ScriptSequence",
    "ToneLabel",
    "build_expansion_prompt",
    "parse_scripts",
    "expand",
    "summarize_tone",
    "StubExpansionClient",
    "HttpExpansionClient",
    "StubTextEncoder",
    "ModelConfig",
    "VideoDenoiser",
    "build_base_model",
    "insert_spatial_adapters",
    "insert_temporal_layers",
    "parameter_groups",
    "save_checkpoint",
    "load_checkpoint",
    "DiffusionSchedule",
    "SampleConfig",
    "make_schedule",
    "sample",
    "TrainConfig",
    "train",
    "AudioAsset",
    "AudioIndex",
    "retrieve_sfx",
    "select_music",
    "SceneClip",
    "MovieTimeline",
    "assemble",
    "export",
    "validate_manifest",
    "frechet_distance",
    "clipsim",
    "motion_energy",
    "RunRecord",
]
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

from .__about__ import __version__
from ._internal import (
    ADAPTER,
    BASE,
    BASE_PRETRAIN,
    GROUPS,
    KINDS,
    MOVIE_FINETUNE,
    MUSIC,
    SFX,
    SPATIAL_FINETUNE,
    STAGES,
    TEMPORAL,
    TEMPORAL_TRAIN,
    TONES,
    consttostr,
    set_debug,
    strtoconst,
)
from .assembly import MovieTimeline, SceneClip, assemble, export, validate_manifest
from .audio_retrieval import AudioAsset, AudioIndex, retrieve_sfx, select_music
from .clients import HttpExpansionClient, StubExpansionClient
from .config import PipelineConfig, load_config
from .diffusion import DiffusionSchedule, SampleConfig, make_schedule, sample
from .evaluation import clipsim, frechet_distance, motion_energy
from .pipeline import RunRecord
from .script_gen import (
    SceneScript,
    ScriptSequence,
    ToneLabel,
    UserBrief,
    build_expansion_prompt,
    expand,
    parse_scripts,
    summarize_tone,
)
from .textenc import StubTextEncoder
from .trainer import TrainConfig, train
from .video_model import (
    ModelConfig,
    VideoDenoiser,
    build_base_model,
    insert_spatial_adapters,
    insert_temporal_layers,
    load_checkpoint,
    parameter_groups,
    save_checkpoint,
)
