# -*- coding: utf-8 -*-
"""Shared functions for tests."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

import os
import shutil
from configparser import ConfigParser
from tempfile import mkdtemp
from unittest import TestCase

from scenecraft.config import load_config
from scenecraft.video_model import (
    ModelConfig,
    build_base_model,
    insert_spatial_adapters,
    insert_temporal_layers,
)

# Learning and end to end runs take minutes
RUN_SLOW = os.environ.get("SCENECRAFT_SLOW", "") == "1"

SMALL_MODEL = {
    "in_channels": 3,
    "base_channels": 16,
    "channel_mults": (1, 2),
    "frames": 4,
    "height": 8,
    "width": 16,
    "n_domains": 2,
    "text_embed_dim": 16,
    "time_embed_dim": 32,
    "attn_heads": 2,
}


class TestScenecraft(TestCase):

    def setUp(self):
        self.tmp = mkdtemp(prefix="test_scenecraft_")

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def path(self, *parts) -> str:
        """Path below the temporary test directory."""
        return os.path.join(self.tmp, *parts)

    def model_config(self, **kwargs) -> ModelConfig:
        """Small model dimensions, kwargs replace single values."""
        values = dict(SMALL_MODEL)
        values.update(kwargs)
        return ModelConfig(**values)

    def base_model(self, seed=0, **kwargs):
        return build_base_model(self.model_config(**kwargs), seed)

    def full_model(self, seed=0, **kwargs):
        """Base model with adapters and temporal layers, both at identity."""
        config = self.model_config(**kwargs)
        model = build_base_model(config, seed)
        insert_spatial_adapters(model, config)
        insert_temporal_layers(model, config)
        return model

    def write_config(self, name="scenecraft.ini", **sections) -> str:
        """
        Write an ini file with the small model and output below tmp.

        :param sections: section -> dict of values replacing the defaults
        """
        values = {
            "model": dict(SMALL_MODEL),
            "schedule": {"steps": 50},
            "sample": {"steps": 5},
            "io": {"out_dir": self.path("out")},
        }
        for section, keys in sections.items():
            values.setdefault(section, {}).update(keys)

        cp = ConfigParser(interpolation=None)
        for section, keys in values.items():
            cp[section] = {
                key: ",".join(str(v) for v in value) if isinstance(value, tuple) else str(value)
                for key, value in keys.items()
            }
        path = self.path(name)
        with open(path, "w") as fh:
            cp.write(fh)
        return path

    def pipeline_config(self, **sections):
        """Loaded PipelineConfig of write_config."""
        return load_config(self.write_config(**sections))
