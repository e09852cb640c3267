# -*- coding: utf-8 -*-
"""Helper functions for all tests."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

import os

import numpy as np
from scipy.io import wavfile

from scenecraft._internal import MUSIC, SFX
from scenecraft.assembly import Upscaler
from scenecraft.audio_retrieval import AudioAsset, write_catalog
from scenecraft.clients import StubExpansionClient, TextExpansionClient
from scenecraft.errors import ClientError

RACE_BRIEF = "a race between a car and an airplane"

RACE_SCENES = [
    "A red sports car waits at the start line of an empty desert runway, 4K",
    "A silver jet airplane taxis next to the car, engines roaring, high resolution",
    "Close-up of the driver gripping the wheel as the race begins, 4K",
    "The airplane lifts off while the car speeds below it, high resolution",
    "The car crosses the checkered flag first and the crowd celebrates victory, 4K",
]

# asset_id, file, caption, kind, tone
CATALOG = (
    ("engine", "engine.wav", "car engine roaring at high speed", SFX, None),
    ("jet", "jet.wav", "jet airplane flying overhead", SFX, None),
    ("crowd", "crowd.wav", "crowd cheering at the finish line", SFX, None),
    ("rain", "rain.wav", "gentle rain on a window", SFX, None),
    ("anthem", "anthem.wav", "triumphant brass fanfare", MUSIC, "triumphant"),
    ("chase", "chase.wav", "fast percussion for a chase", MUSIC, "tense"),
    ("drone", "drone.wav", "dark ambient drone", MUSIC, "ominous"),
)


def write_wav(path: str, seconds=1.0, rate=8000, freq=440.0) -> str:
    """Write a 16 bit mono sine tone."""
    t = np.arange(int(seconds * rate)) / float(rate)
    data = (np.sin(2 * np.pi * freq * t) * 8000).astype(np.int16)
    wavfile.write(path, rate, data)
    return path


def make_assets(directory: str, kinds=(SFX, MUSIC)) -> list:
    """Write the wave files of CATALOG and return their AudioAssets."""
    os.makedirs(directory, exist_ok=True)
    rc = []
    for k, (asset_id, name, caption, kind, tone) in enumerate(CATALOG):
        if kind not in kinds:
            continue
        seconds = 4.0 if kind == MUSIC else 0.5 + 0.25 * k
        path = write_wav(os.path.join(directory, name), seconds, freq=220.0 * (k + 1))
        rc.append(AudioAsset(asset_id, path, caption, kind, seconds, tone))
    return rc


def make_catalog(directory: str, kinds=(SFX, MUSIC)) -> str:
    """Write wave files and catalog.json, returns the catalog path."""
    path = os.path.join(directory, "catalog.json")
    write_catalog(make_assets(directory, kinds), path)
    return path


def numbered(texts) -> str:
    """Completion text with one numbered line per text."""
    return "\n".join("{0}. {1}".format(k + 1, text) for k, text in enumerate(texts))


class FlakyClient(TextExpansionClient):
    """Fails with ClientError a number of times, then answers like the stub."""

    def __init__(self, failures: int, answer=None):
        self.answer = answer
        self.calls = 0
        self.failures = failures
        self._stub = StubExpansionClient()

    def complete(self, prompt: str, **params) -> str:
        self.calls += 1
        if self.calls <= self.failures:
            raise ClientError("connection refused")
        if self.answer is not None:
            return self.answer
        return self._stub.complete(prompt, **params)


class BrokenUpscaler(Upscaler):
    """Identity upscaler which fails on one scene."""

    scale = 1

    def __init__(self, fail_on: int):
        self.fail_on = fail_on
        self.calls = 0

    def upscale(self, frames):
        self.calls += 1
        if self.calls - 1 == self.fail_on:
            raise RuntimeError("out of memory")
        return frames
