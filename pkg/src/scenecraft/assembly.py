# -*- coding: utf-8 -*-
"""Movie timeline, upscaling and export with manifest."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

import json
import os
import shutil
import warnings
from concurrent.futures import ThreadPoolExecutor

import torch
from torch.nn import functional as F

from ._internal import MUSIC, SFX, acheck
from .audio_retrieval import AudioAsset
from .dataset import save_frames
from .errors import DegradedOutputWarning, ManifestError, UpscalerError
from .script_gen import SceneScript

MANIFEST_VERSION = 1
MANIFEST_FILE = "manifest.json"
MUSIC_GAIN_DB = -12.0
SFX_GAIN_DB = -6.0

# Tolerance for time span arithmetic in seconds
_TIME_EPS = 1e-9


def frame_count(duration_seconds: float, fps: float) -> int:
    """Frames of a scene, round(duration * fps)."""
    return int(round(duration_seconds * fps))


def conform_frames(frames: torch.Tensor, count: int) -> torch.Tensor:
    """
    Resample frames [F, ...] to count frames by nearest frame.

    :param frames: Clip frames
    :param count: Wanted frame count >= 1
    :return: <class 'torch.Tensor'> [count, ...]
    """
    if count < 1:
        raise ValueError("frame count must be >= 1, got {0}".format(count))
    n = frames.shape[0]
    if n == count:
        return frames
    index = [min(n - 1, int(j * n / count)) for j in range(count)]
    return frames[index]


class SceneClip:
    """Frames of one scene with an optional sound effect."""

    __slots__ = "fps", "frames", "scene", "sfx", "sfx_gain_db"

    def __init__(
        self, scene: SceneScript, frames: torch.Tensor, fps=8.0, sfx=None, sfx_gain_db=SFX_GAIN_DB
    ):
        acheck(SceneScript, scene=scene)
        acheck(AudioAsset, sfx_noneok=sfx)
        if not fps > 0:
            raise ValueError("fps must be > 0, got {0}".format(fps))
        if frames.dim() != 4:
            raise ValueError("scene frames must be [frames, channels, height, width]")
        expected = frame_count(scene.duration_seconds, fps)
        if frames.shape[0] != expected:
            raise ValueError(
                "scene {0} needs {1} frames for {2:g} s at {3:g} fps, got {4}".format(
                    scene.index, expected, scene.duration_seconds, fps, frames.shape[0]
                )
            )
        if sfx is not None and sfx.kind != SFX:
            raise ValueError("asset '{0}' is no sound effect".format(sfx.asset_id))
        self.fps = float(fps)
        self.frames = frames
        self.scene = scene
        self.sfx = sfx
        self.sfx_gain_db = float(sfx_gain_db)

    def _get_duration(self) -> float:
        return self.scene.duration_seconds

    def replace(self, frames=None, sfx=False):
        """Copy with new frames and/or sound effect, sfx=False keeps it."""
        return SceneClip(
            self.scene,
            self.frames if frames is None else frames,
            self.fps,
            self.sfx if sfx is False else sfx,
            self.sfx_gain_db,
        )

    duration = property(_get_duration)


class MovieTimeline:
    """Back to back scene clips and one music track spanning all of them."""

    __slots__ = "music", "music_gain_db", "scenes", "spans", "tone", "upscale_factor"

    def __init__(
        self, scenes, music=None, music_gain_db=MUSIC_GAIN_DB, tone=None, upscale_factor=1
    ):
        scenes = list(scenes)
        if not scenes:
            raise ValueError("a movie needs at least one scene")
        for clip in scenes:
            acheck(SceneClip, clip=clip)
        acheck(AudioAsset, music_noneok=music)
        if music is not None and music.kind != MUSIC:
            raise ValueError("asset '{0}' is no music track".format(music.asset_id))

        self.music = music
        self.music_gain_db = float(music_gain_db)
        self.scenes = scenes
        self.tone = tone
        self.upscale_factor = upscale_factor

        self.spans = []
        start = 0.0
        for clip in scenes:
            end = start + clip.duration
            self.spans.append((start, end))
            start = end

    def _get_total_duration(self) -> float:
        return self.spans[-1][1]

    total_duration = property(_get_total_duration)


def assemble(
    scene_clips,
    sfx_choices,
    music: AudioAsset,
    music_gain_db=MUSIC_GAIN_DB,
    sfx_gain_db=SFX_GAIN_DB,
    tone=None,
    allow_silent=False,
) -> MovieTimeline:
    """
    Place scene clips as hard cuts and attach audio.

    :param scene_clips: SceneClip list in movie order
    :param sfx_choices: One AudioAsset or None per scene
    :param music: Background track for the whole movie
    :param allow_silent: Accept a missing music track, warns
    :param tone: ToneLabel recorded in the manifest
    :return: MovieTimeline
    """
    scene_clips = list(scene_clips)
    sfx_choices = list(sfx_choices)
    if not scene_clips:
        raise ValueError("a movie needs at least one scene")
    if len(sfx_choices) != len(scene_clips):
        raise ValueError(
            "got {0} sound effect choices for {1} scenes".format(len(sfx_choices), len(scene_clips))
        )
    if music is None:
        if not allow_silent:
            raise ValueError("a movie needs one background music track")
        warnings.warn("movie is assembled without background music", DegradedOutputWarning)

    clips = []
    for clip, sfx in zip(scene_clips, sfx_choices):
        acheck(SceneClip, clip=clip)
        clip = clip.replace(sfx=sfx)
        clip.sfx_gain_db = float(sfx_gain_db)
        clips.append(clip)
    return MovieTimeline(clips, music, music_gain_db, tone)


class Upscaler:
    """Interface of upscaler clients: frames in, frames * scale out."""

    name = "base"
    scale = 1

    def upscale(self, frames: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError()


class IdentityUpscaler(Upscaler):
    name = "identity"
    scale = 1

    def upscale(self, frames: torch.Tensor) -> torch.Tensor:
        return frames


class NearestUpscaler(Upscaler):
    """Nearest neighbour upscaling of every frame."""

    name = "nearest"

    def __init__(self, factor=4):
        acheck(int, factor=factor)
        if factor < 1:
            raise ValueError("upscale factor must be >= 1")
        self.scale = factor

    def upscale(self, frames: torch.Tensor) -> torch.Tensor:
        return F.interpolate(frames, scale_factor=self.scale, mode="nearest")


def upscaler_from_config(cfg) -> Upscaler:
    """Create the upscaler named by [assembly] upscaler."""
    name = cfg.get("assembly", "upscaler")
    if name == "identity":
        return IdentityUpscaler()
    if name == "nearest":
        return NearestUpscaler(cfg.get("assembly", "upscale_factor"))
    raise ValueError("unknown upscaler '{0}'".format(name))


def apply_upscaler(timeline: MovieTimeline, client: Upscaler) -> MovieTimeline:
    """
    Route every scene through the upscaler.

    :param timeline: MovieTimeline
    :param client: Upscaler
    :return: New MovieTimeline with the accumulated scale factor
    """
    acheck(MovieTimeline, timeline=timeline)
    acheck(Upscaler, client=client)

    done = []
    for k, clip in enumerate(timeline.scenes):
        try:
            frames = client.upscale(clip.frames)
        except Exception as e:
            raise UpscalerError(k, str(e), done)

        f, c, h, w = clip.frames.shape
        if tuple(frames.shape) != (f, c, h * client.scale, w * client.scale):
            raise UpscalerError(
                k, "unexpected output shape {0}".format(tuple(frames.shape)), done
            )
        done.append(clip.replace(frames=frames))

    return MovieTimeline(
        done,
        timeline.music,
        timeline.music_gain_db,
        timeline.tone,
        timeline.upscale_factor * client.scale,
    )


class ExportManifest:
    """Content of manifest.json of an exported movie."""

    __slots__ = "data", "path"

    def __init__(self, data: dict, path=""):
        self.data = data
        self.path = path

    def _get_music(self):
        return self.data.get("music")

    def _get_scenes(self) -> list:
        return self.data.get("scenes", [])

    def _get_version(self) -> int:
        return self.data.get("version")

    def without_run(self) -> dict:
        """Manifest data without the run metadata."""
        return {k: v for k, v in self.data.items() if k != "run"}

    music = property(_get_music)
    scenes = property(_get_scenes)
    version = property(_get_version)


def _copy_audio(asset: AudioAsset, out_dir: str) -> str:
    ext = os.path.splitext(asset.path)[1] or ".wav"
    rel = os.path.join("audio", asset.asset_id + ext)
    target = os.path.join(out_dir, rel)
    audio_dir = os.path.realpath(os.path.join(out_dir, "audio"))
    if os.path.dirname(os.path.realpath(target)) != audio_dir:
        raise ValueError("asset_id '{0}' leaves the audio folder".format(asset.asset_id))
    if not os.path.exists(target):
        os.makedirs(os.path.dirname(target), exist_ok=True)
        shutil.copyfile(asset.path, target)
    return rel.replace(os.sep, "/")


def export(
    timeline: MovieTimeline, out_dir: str, provenance=None, run=None, workers=1
) -> ExportManifest:
    """
    Write frames, audio and manifest.json of a movie.

    The manifest is written last and validated afterwards.

    :param timeline: MovieTimeline
    :param out_dir: Target directory
    :param provenance: dict with seeds, checkpoint id and config hash
    :param run: dict with run metadata, excluded from determinism checks
    :param workers: Threads for frame export
    :return: ExportManifest
    """
    acheck(MovieTimeline, timeline=timeline)
    os.makedirs(out_dir, exist_ok=True)

    def write_scene(k):
        save_frames(timeline.scenes[k].frames, os.path.join(out_dir, "scene_{0:03}".format(k)))

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        list(pool.map(write_scene, range(len(timeline.scenes))))

    scenes = []
    for k, (clip, (start, end)) in enumerate(zip(timeline.scenes, timeline.spans)):
        f, _, h, w = clip.frames.shape
        entry = {
            "index": k,
            "text": clip.scene.text,
            "frames": "scene_{0:03}/frame_*.png".format(k),
            "frame_count": f,
            "fps": clip.fps,
            "height": h,
            "width": w,
            "start": start,
            "end": end,
            "sfx": None,
        }
        if clip.sfx is not None:
            entry["sfx"] = {
                "asset_id": clip.sfx.asset_id,
                "path": _copy_audio(clip.sfx, out_dir),
                "offset": start,
                "duration": min(clip.sfx.duration_seconds, clip.duration),
                "truncated": clip.sfx.duration_seconds > clip.duration,
                "gain_db": clip.sfx_gain_db,
            }
        scenes.append(entry)

    music = None
    if timeline.music is not None:
        music = {
            "asset_id": timeline.music.asset_id,
            "path": _copy_audio(timeline.music, out_dir),
            "gain_db": timeline.music_gain_db,
            "start": 0.0,
            "end": timeline.total_duration,
        }

    tone = timeline.tone
    if tone is not None and hasattr(tone, "to_dict"):
        tone = tone.to_dict()

    data = {
        "version": MANIFEST_VERSION,
        "total_duration": timeline.total_duration,
        "upscale_factor": timeline.upscale_factor,
        "tone": tone,
        "scenes": scenes,
        "music": music,
        "provenance": provenance or {},
    }
    if run is not None:
        data["run"] = run

    path = os.path.join(out_dir, MANIFEST_FILE)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")

    violations = validate_manifest(out_dir)
    if violations:
        raise ManifestError(violations[0])
    return ExportManifest(data, path)


def load_manifest(out_dir: str) -> ExportManifest:
    path = os.path.join(out_dir, MANIFEST_FILE)
    try:
        with open(path, encoding="utf-8") as fh:
            return ExportManifest(json.load(fh), path)
    except (OSError, ValueError) as e:
        raise ManifestError("can not read manifest '{0}' | {1}".format(path, e))


def validate_manifest(out_dir: str) -> list:
    """
    Check an exported movie directory.

    :param out_dir: Directory with manifest.json
    :return: <class 'list'> of violation messages, empty if valid
    """
    try:
        manifest = load_manifest(out_dir)
    except ManifestError as e:
        return [str(e)]

    rc = []
    data = manifest.data
    if data.get("version") != MANIFEST_VERSION:
        rc.append("unsupported manifest version {0}".format(data.get("version")))
        return rc

    scenes = data.get("scenes") or []
    if not scenes:
        rc.append("manifest has no scenes")
        return rc

    total = data.get("total_duration", 0.0)
    cursor = 0.0
    for k, entry in enumerate(scenes):
        start = entry.get("start")
        end = entry.get("end")
        if entry.get("index") != k:
            rc.append("scene {0} has index {1}".format(k, entry.get("index")))
        if start is None or end is None or abs(start - cursor) > _TIME_EPS or not end > start:
            rc.append(
                "scene {0} span [{1}, {2}) does not continue at {3}".format(k, start, end, cursor)
            )
        cursor = end if end is not None else cursor

        for j in range(entry.get("frame_count", 0)):
            frame = os.path.join(out_dir, "scene_{0:03}".format(k), "frame_{0:04}.png".format(j))
            if not os.path.isfile(frame):
                rc.append("missing frame file '{0}'".format(frame))
        if entry.get("frame_count", 0) < 1:
            rc.append("scene {0} has no frames".format(k))

        sfx = entry.get("sfx")
        if sfx is not None:
            sfx_path = os.path.join(out_dir, sfx.get("path", ""))
            if not os.path.isfile(sfx_path):
                rc.append("missing audio file '{0}'".format(sfx_path))
            if abs(sfx.get("offset", -1.0) - start) > _TIME_EPS:
                rc.append("sound effect of scene {0} is not anchored at scene start".format(k))
            if sfx.get("duration", 0.0) > end - start + _TIME_EPS:
                rc.append("sound effect of scene {0} exceeds the scene".format(k))

    if abs(cursor - total) > _TIME_EPS:
        rc.append("scene spans end at {0}, total duration is {1}".format(cursor, total))

    music = data.get("music")
    if music is not None:
        music_path = os.path.join(out_dir, music.get("path", ""))
        if not os.path.isfile(music_path):
            rc.append("missing audio file '{0}'".format(music_path))
        if music.get("start") != 0.0 or abs(music.get("end", -1.0) - total) > _TIME_EPS:
            rc.append("music does not span the whole movie")

    return rc
