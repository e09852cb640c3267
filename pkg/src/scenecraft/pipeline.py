# -*- coding: utf-8 -*-
"""Pipeline commands from brief to exported movie."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

import hashlib
import json
import os
import shutil
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from datetime import datetime, timezone
from uuid import uuid4

from ._internal import (
    MUSIC,
    SFX,
    SPATIAL_FINETUNE,
    TEMPORAL_TRAIN,
    acheck,
    consttostr,
    strtoconst,
)
from .assembly import (
    SceneClip,
    apply_upscaler,
    assemble,
    conform_frames,
    export,
    frame_count,
    upscaler_from_config,
)
from .audio_retrieval import (
    AudioAsset,
    AudioIndex,
    HashingTextEmbedder,
    StubVideoEmbedder,
    build_index,
    load_catalog,
    load_index,
    retrieve_sfx,
    select_music,
)
from .clients import client_from_config
from .config import PipelineConfig
from .dataset import (
    ClipDataset,
    ClipItem,
    load_dataset,
    load_frames,
    make_moving_squares,
    write_dataset,
)
from .diffusion import sample
from .errors import ConfigError, DegradedOutputWarning, PipelineError, StageOrderError
from .evaluation import (
    clipsim,
    extract_features,
    frechet_distance,
    gaussian_stats,
    metric_entry,
    motion_energy,
    write_report,
)
from .script_gen import ScriptSequence, ToneLabel, UserBrief, expand, summarize_tone
from .textenc import text_encoder_from_config
from .trainer import train
from .video_model import (
    build_base_model,
    codec_from_config,
    insert_spatial_adapters,
    insert_temporal_layers,
    load_checkpoint,
)

RUNS_FILE = "runs.jsonl"
SCRIPTS_FILE = "scripts.json"
AUDIO_FILE = "audio.json"
METRICS_FILE = "metrics.json"

STATUS_RUNNING = "running"
STATUS_OK = "ok"
STATUS_FAILED = "failed"


def derive_seed(root: int, name: str, counter=0) -> int:
    """
    Seed of a named stage derived from the root seed.

    :param root: Root seed of the run
    :param name: Stage name
    :param counter: Running number within the stage
    :return: <class 'int'> seed in [0, 2**31)
    """
    digest = hashlib.sha256("{0}:{1}:{2}".format(root, name, counter).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % 2**31


def file_digest(path: str) -> str:
    """sha256 of the file content."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def scene_dir_name(index: int) -> str:
    return "scene_{0:03}".format(index)


class RunRecord:
    """One line of the append only runs.jsonl log."""

    __slots__ = (
        "command",
        "config_hash",
        "error",
        "outputs",
        "run_id",
        "seeds",
        "started",
        "status",
        "timings",
        "warnings",
    )

    def __init__(self, command: str, config_hash: str):
        self.command = command
        self.config_hash = config_hash
        self.error = ""
        self.outputs = {}
        self.run_id = uuid4().hex
        self.seeds = {}
        self.started = datetime.now(timezone.utc).isoformat()
        self.status = STATUS_RUNNING
        self.timings = {}
        self.warnings = []

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__slots__}


def append_run_record(out_dir: str, record: RunRecord) -> str:
    """Append record to out_dir/runs.jsonl and return the file path."""
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, RUNS_FILE)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
    return path


def read_run_records(out_dir: str) -> list:
    """All records of out_dir/runs.jsonl, oldest first."""
    path = os.path.join(out_dir, RUNS_FILE)
    if not os.path.isfile(path):
        return []
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


class RunContext:
    """Seeds, stage timings and outputs of one running command."""

    __slots__ = "cfg", "out_dir", "record"

    def __init__(self, command: str, cfg: PipelineConfig, out_dir=None):
        self.cfg = cfg
        self.out_dir = out_dir or cfg.get("io", "out_dir")
        self.record = RunRecord(command, cfg.config_hash())

    def seed(self, name: str, counter=0) -> int:
        """Derived seed, recorded as 'name:counter'."""
        value = derive_seed(self.cfg.get("io", "seed"), name, counter)
        self.record.seeds["{0}:{1}".format(name, counter)] = value
        return value

    def output(self, name: str, path: str) -> str:
        self.record.outputs[name] = path
        return path

    @contextmanager
    def stage(self, name: str, wrap=False):
        """
        Time a stage.

        :param name: Stage name
        :param wrap: Raise failures as PipelineError naming the stage
        """
        start = time.perf_counter()
        try:
            yield
        except PipelineError:
            raise
        except Exception as e:
            if wrap:
                raise PipelineError(name, str(e)) from e
            raise
        finally:
            self.record.timings[name] = self.record.timings.get(name, 0.0) + (
                time.perf_counter() - start
            )


def _execute(command: str, cfg: PipelineConfig, out_dir, body) -> RunRecord:
    """
    Run body(ctx) and log the RunRecord whatever the outcome.

    Warnings raised meanwhile are stored in the record and emitted again.
    """
    acheck(PipelineConfig, cfg=cfg)
    ctx = RunContext(command, cfg, out_dir)
    caught = []
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            body(ctx)
        ctx.record.status = STATUS_OK
    except Exception as e:
        ctx.record.status = STATUS_FAILED
        ctx.record.error = "{0}: {1}".format(type(e).__name__, e)
        raise
    finally:
        ctx.record.warnings = [
            "{0}: {1}".format(w.category.__name__, w.message) for w in caught
        ]
        append_run_record(ctx.out_dir, ctx.record)
        for w in caught:
            warnings.warn(w.message, w.category)
    return ctx.record


def load_model(cfg: PipelineConfig, checkpoint=None, use_ema=False):
    """
    Load the checkpoint given or named by [model] checkpoint.

    :return: <class 'tuple'> (VideoDenoiser, checkpoint path)
    """
    path = checkpoint or cfg.get("model", "checkpoint")
    if not path:
        raise ConfigError("no checkpoint given and [model] checkpoint is empty")
    if not os.path.isfile(path):
        raise FileNotFoundError("checkpoint '{0}' does not exist".format(path))
    model, _ = load_checkpoint(path, use_ema)
    if model.config != cfg.model_config():
        raise ConfigError(
            "checkpoint '{0}' was built with another [model] section".format(path)
        )
    return model, path


def sample_scenes(
    model, scripts: ScriptSequence, cfg: PipelineConfig, ctx: RunContext, encoder=None, codec=None
):
    """
    Sample one clip per scene, seeds derived per scene index.

    :param codec: FrameCodec decoding the samples, [model] codec if None
    :return: <class 'list'> of frames [F, C, H, W] in scene order
    """
    encoder = encoder or text_encoder_from_config(cfg)
    codec = codec or codec_from_config(cfg)
    sched = cfg.schedule()
    seeds = [ctx.seed("sample", scene.index) for scene in scripts.scenes]
    model.eval()

    def one(k):
        sconf = cfg.sample_config(seeds[k])
        cond = encoder.encode(scripts.scenes[k].text)
        return codec.decode(sample(model, cond, sconf, sched)[0]).detach().cpu()

    with ThreadPoolExecutor(max_workers=cfg.get("sample", "workers")) as pool:
        return list(pool.map(one, range(len(scripts))))


def write_samples(scripts: ScriptSequence, clips, root: str, fps: float, domain_id=0) -> list:
    """Write clips as dataset directories scene_000, scene_001, ..."""
    rc = []
    for scene, clip in zip(scripts.scenes, clips):
        item = ClipItem(clip, scene.text, domain_id, fps, scene_dir_name(scene.index))
        rc.extend(write_dataset(ClipDataset([item]), root))
    return rc


def read_samples(scripts: ScriptSequence, root: str, cfg: PipelineConfig) -> list:
    """Frames of every scene written by write_samples."""
    mc = cfg.model_config()
    return [
        load_frames(
            os.path.join(root, scene_dir_name(scene.index)), mc.height, mc.width, mc.in_channels
        )
        for scene in scripts.scenes
    ]


def open_index(cfg: PipelineConfig) -> AudioIndex:
    """
    Audio index named by [audio] index or built from [audio] catalog.

    Without both the index is empty.
    """
    dim = cfg.get("audio", "embed_dim")
    text_embedder = HashingTextEmbedder(dim)
    video_embedder = StubVideoEmbedder(dim, cfg.get("audio", "seed"))
    if cfg.get("audio", "index"):
        index = load_index(cfg.get("audio", "index"), text_embedder, video_embedder)
        if index.dim != dim:
            raise ConfigError(
                "index dimension {0} does not match [audio] embed_dim {1}".format(index.dim, dim)
            )
        return index
    if cfg.get("audio", "catalog"):
        assets = load_catalog(cfg.get("audio", "catalog"))
        return build_index(assets, dim, text_embedder, video_embedder)
    return AudioIndex(dim, text_embedder, video_embedder)


def choose_sfx(scripts: ScriptSequence, clips, index: AudioIndex, cfg: PipelineConfig) -> tuple:
    """
    Best sound effect per scene.

    :return: <class 'tuple'> (assets or None per scene, ranked pairs per scene)
    """
    if not index.assets(SFX):
        warnings.warn(
            "audio catalog has no sound effects, scenes stay silent", DegradedOutputWarning
        )
        return [None] * len(scripts), [[] for _ in scripts.scenes]

    assets = []
    ranked = []
    for scene, clip in zip(scripts.scenes, clips):
        result = retrieve_sfx(
            scene, clip, index, cfg.get("audio", "k"), cfg.get("audio", "fusion_lambda")
        )
        assets.append(index.get(result.top()))
        ranked.append([[asset_id, score] for asset_id, score in result.ranked])
    return assets, ranked


def choose_music(tone: ToneLabel, index: AudioIndex, seed: int):
    """Background track of the tone or None if the catalog has no music."""
    if not index.assets(MUSIC):
        warnings.warn(
            "audio catalog has no music tracks, movie has no background music",
            DegradedOutputWarning,
        )
        return None
    return select_music(tone, index, seed)


def write_audio_choices(path: str, tone: ToneLabel, sfx, ranked, music) -> None:
    data = {
        "tone": tone.to_dict(),
        "music": None if music is None else music.to_dict(),
        "scenes": [
            {"index": k, "sfx": None if asset is None else asset.to_dict(), "ranked": r}
            for k, (asset, r) in enumerate(zip(sfx, ranked))
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_audio_choices(path: str) -> tuple:
    """
    Read audio.json.

    :return: <class 'tuple'> (ToneLabel, sfx assets or None per scene, music or None)
    """
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    try:
        tone = ToneLabel(data["tone"]["category"], data["tone"]["confidence"])
        sfx = [
            None if s["sfx"] is None else AudioAsset.from_dict(s["sfx"])
            for s in sorted(data["scenes"], key=lambda s: s["index"])
        ]
        music = None if data["music"] is None else AudioAsset.from_dict(data["music"])
    except (KeyError, TypeError) as e:
        raise ValueError("bad audio choice file '{0}' | {1}".format(path, e))
    return tone, sfx, music


def build_timeline(scripts: ScriptSequence, clips, sfx, music, tone, cfg: PipelineConfig):
    """Conform clips to the scene durations, assemble and upscale."""
    fps = cfg.get("assembly", "fps")
    scene_clips = [
        SceneClip(scene, conform_frames(clip, frame_count(scene.duration_seconds, fps)), fps)
        for scene, clip in zip(scripts.scenes, clips)
    ]
    timeline = assemble(
        scene_clips,
        sfx,
        music,
        cfg.get("assembly", "music_gain_db"),
        cfg.get("assembly", "sfx_gain_db"),
        tone,
        allow_silent=True,
    )
    return apply_upscaler(timeline, upscaler_from_config(cfg))


def _brief(cfg: PipelineConfig, text: str, n_scenes=None, scene_seconds=None) -> UserBrief:
    return UserBrief(
        text,
        cfg.get("script", "n_scenes") if n_scenes is None else n_scenes,
        cfg.get("script", "scene_seconds") if scene_seconds is None else scene_seconds,
    )


def _expand(cfg: PipelineConfig, brief: UserBrief, client=None) -> ScriptSequence:
    client = client or client_from_config(cfg)
    return expand(
        brief,
        client,
        cfg.get("llm", "retries"),
        temperature=cfg.get("llm", "temperature"),
    )


def cmd_expand(cfg, text, n_scenes=None, scene_seconds=None, out_dir=None, client=None):
    """
    Expand a brief into out_dir/scripts.json.

    :return: RunRecord
    """

    def body(ctx):
        with ctx.stage("expand"):
            scripts = _expand(cfg, _brief(cfg, text, n_scenes, scene_seconds), client)
            os.makedirs(ctx.out_dir, exist_ok=True)
            scripts.save(ctx.output("scripts", os.path.join(ctx.out_dir, SCRIPTS_FILE)))

    return _execute("expand", cfg, out_dir, body)


def cmd_make_dataset(cfg, n_clips=8, stills=False, out_dir=None, name="dataset"):
    """
    Write the synthetic moving square dataset to out_dir/name.

    :param stills: Single frame items for the image stages
    :return: RunRecord
    """

    def body(ctx):
        mc = cfg.model_config()
        with ctx.stage("make_dataset"):
            dataset = make_moving_squares(
                n_clips,
                frames=1 if stills else mc.frames,
                height=mc.height,
                width=mc.width,
                channels=mc.in_channels,
                n_domains=mc.n_domains,
                seed=ctx.seed("dataset"),
                fps=cfg.get("assembly", "fps"),
            )
            root = ctx.output("dataset", os.path.join(ctx.out_dir, name))
            write_dataset(dataset, root)

    return _execute("make-dataset", cfg, out_dir, body)


def cmd_train(cfg, stage, dataset_dir: str, checkpoint=None, out_dir=None, encoder=None):
    """
    Train one stage and write out_dir/checkpoints/<stage>.pt.

    Spatial adapters are inserted before SPATIAL_FINETUNE and temporal layers
    before TEMPORAL_TRAIN if missing. Without checkpoint a fresh base model
    is built.

    :param stage: Stage constant or name like 'spatial-finetune'
    :param dataset_dir: Dataset directory as written by make-dataset
    :param checkpoint: Checkpoint to continue, [model] checkpoint if None
    :return: RunRecord
    """
    stage = strtoconst(stage) if isinstance(stage, str) else stage
    stage_name = consttostr(stage)

    def body(ctx):
        mc = cfg.model_config()
        with ctx.stage("load"):
            if checkpoint or cfg.get("model", "checkpoint"):
                model, _ = load_model(cfg, checkpoint)
            else:
                model = build_base_model(mc, ctx.seed("model"))

            if stage == SPATIAL_FINETUNE and not model.has_adapters:
                insert_spatial_adapters(model, mc)
            if stage == TEMPORAL_TRAIN and not model.has_temporal:
                if not model.has_adapters:
                    raise StageOrderError(
                        "TEMPORAL_TRAIN needs a model with spatial adapters, "
                        "run SPATIAL_FINETUNE first"
                    )
                insert_temporal_layers(model, mc)

            dataset = load_dataset(dataset_dir, mc.height, mc.width, mc.in_channels)

        name = stage_name.lower()
        ckpt = os.path.join(ctx.out_dir, "checkpoints", name + ".pt")
        metrics = os.path.join(ctx.out_dir, "metrics", name + ".jsonl")
        os.makedirs(os.path.dirname(ckpt), exist_ok=True)
        os.makedirs(os.path.dirname(metrics), exist_ok=True)

        with ctx.stage("train"):
            train(
                model,
                dataset,
                cfg.train_config(stage, ctx.seed("train", stage)),
                cfg.schedule(),
                encoder or text_encoder_from_config(cfg),
                checkpoint=ckpt,
                metrics_log=metrics,
                codec=codec_from_config(cfg),
            )
        ctx.output("checkpoint", ckpt)
        ctx.output("metrics_log", metrics)

    return _execute("train", cfg, out_dir, body)


def cmd_sample(cfg, scripts_path: str, checkpoint=None, out_dir=None, encoder=None):
    """
    Sample one clip per scene into out_dir/samples/scene_NNN.

    :return: RunRecord
    """

    def body(ctx):
        with ctx.stage("load"):
            scripts = ScriptSequence.load(scripts_path)
            model, _ = load_model(cfg, checkpoint, cfg.get("sample", "use_ema"))
        with ctx.stage("sample"):
            clips = sample_scenes(model, scripts, cfg, ctx, encoder)
        with ctx.stage("write"):
            root = ctx.output("samples", os.path.join(ctx.out_dir, "samples"))
            write_samples(
                scripts, clips, root, cfg.get("assembly", "fps"), cfg.get("sample", "domain_id")
            )

    return _execute("sample", cfg, out_dir, body)


def cmd_retrieve_audio(cfg, scripts_path: str, samples_dir: str, out_dir=None, client=None):
    """
    Choose sound effects, tone and music into out_dir/audio.json.

    :return: RunRecord
    """

    def body(ctx):
        with ctx.stage("load"):
            scripts = ScriptSequence.load(scripts_path)
            clips = read_samples(scripts, samples_dir, cfg)
            index = open_index(cfg)
        with ctx.stage("retrieve_sfx"):
            sfx, ranked = choose_sfx(scripts, clips, index, cfg)
        with ctx.stage("summarize_tone"):
            tone = summarize_tone(scripts, client or client_from_config(cfg))
        with ctx.stage("select_music"):
            music = choose_music(tone, index, ctx.seed("music"))
        os.makedirs(ctx.out_dir, exist_ok=True)
        write_audio_choices(
            ctx.output("audio", os.path.join(ctx.out_dir, AUDIO_FILE)), tone, sfx, ranked, music
        )

    return _execute("retrieve-audio", cfg, out_dir, body)


def cmd_assemble(cfg, scripts_path: str, samples_dir: str, audio_path: str, out_dir=None):
    """
    Assemble and export a movie into out_dir/movie.

    :return: RunRecord
    """

    def body(ctx):
        with ctx.stage("load"):
            scripts = ScriptSequence.load(scripts_path)
            clips = read_samples(scripts, samples_dir, cfg)
            tone, sfx, music = read_audio_choices(audio_path)
            if len(sfx) != len(scripts):
                raise ValueError(
                    "audio choices cover {0} scenes, scripts have {1}".format(
                        len(sfx), len(scripts)
                    )
                )
        with ctx.stage("assemble"):
            timeline = build_timeline(scripts, clips, sfx, music, tone, cfg)
        with ctx.stage("export"):
            target = ctx.output("movie", os.path.join(ctx.out_dir, "movie"))
            if os.path.isdir(target):
                shutil.rmtree(target)
            export(
                timeline,
                target,
                {"config_hash": ctx.record.config_hash},
                {"run_id": ctx.record.run_id, "command": "assemble", "started": ctx.record.started},
                cfg.get("sample", "workers"),
            )

    return _execute("assemble", cfg, out_dir, body)


def cmd_evaluate(cfg, samples_dir: str, reference_dir: str, out_dir=None):
    """
    Frechet distance of stub video features, text video similarity and
    motion energy into out_dir/metrics.json.

    :return: RunRecord
    """

    def body(ctx):
        mc = cfg.model_config()
        dim = cfg.get("audio", "embed_dim")
        extractor_id = cfg.get("eval", "extractor")
        extractor = StubVideoEmbedder(dim, cfg.get("audio", "seed"))

        with ctx.stage("load"):
            samples = load_dataset(samples_dir, mc.height, mc.width, mc.in_channels)
            reference = load_dataset(reference_dir, mc.height, mc.width, mc.in_channels)
            for name, ds in (("samples", samples), ("reference", reference)):
                if len(ds) < 2:
                    raise ValueError(
                        "{0} need at least 2 clips, got {1}".format(name, len(ds))
                    )

        with ctx.stage("evaluate"):
            clips = [item.frames for item in samples]
            ref_clips = [item.frames for item in reference]
            fd = frechet_distance(
                gaussian_stats(extract_features(clips, extractor, extractor_id)),
                gaussian_stats(extract_features(ref_clips, extractor, extractor_id)),
            )
            sim = clipsim(
                [item.caption for item in samples], clips, HashingTextEmbedder(dim), extractor
            )
            counts = {"n_samples": len(samples), "n_reference": len(reference)}
            entries = [
                metric_entry("fvd_style", fd, extractor_id, **counts),
                metric_entry("clipsim_style", sim, extractor_id, n_samples=len(samples)),
                metric_entry(
                    "motion_energy",
                    sum(motion_energy(c) for c in clips) / len(clips),
                    n_samples=len(samples),
                ),
                metric_entry(
                    "motion_energy_reference",
                    sum(motion_energy(c) for c in ref_clips) / len(ref_clips),
                    n_reference=len(reference),
                ),
            ]
        os.makedirs(ctx.out_dir, exist_ok=True)
        write_report(ctx.output("metrics", os.path.join(ctx.out_dir, METRICS_FILE)), entries)

    return _execute("evaluate", cfg, out_dir, body)


def cmd_make_movie(
    cfg,
    text: str,
    checkpoint=None,
    n_scenes=None,
    scene_seconds=None,
    out_dir=None,
    client=None,
    encoder=None,
):
    """
    Brief to exported movie in one run.

    Work happens in a staging directory which becomes out_dir/movie on
    success and out_dir/failed/<run_id> on failure. Failures raise
    PipelineError with the stage name.

    :return: RunRecord
    """

    def body(ctx):
        staging = os.path.join(ctx.out_dir, ".staging-" + ctx.record.run_id)
        os.makedirs(staging)
        try:
            with ctx.stage("expand", wrap=True):
                scripts = _expand(cfg, _brief(cfg, text, n_scenes, scene_seconds), client)
                scripts.save(os.path.join(staging, SCRIPTS_FILE))
            with ctx.stage("load_model", wrap=True):
                model, path = load_model(cfg, checkpoint, cfg.get("sample", "use_ema"))
                checkpoint_id = file_digest(path)
            with ctx.stage("sample", wrap=True):
                codec = codec_from_config(cfg)
                clips = sample_scenes(model, scripts, cfg, ctx, encoder, codec)
            with ctx.stage("retrieve_sfx", wrap=True):
                index = open_index(cfg)
                sfx, ranked = choose_sfx(scripts, clips, index, cfg)
            with ctx.stage("summarize_tone", wrap=True):
                tone = summarize_tone(scripts, client or client_from_config(cfg))
            with ctx.stage("select_music", wrap=True):
                music = choose_music(tone, index, ctx.seed("music"))
                write_audio_choices(os.path.join(staging, AUDIO_FILE), tone, sfx, ranked, music)
            with ctx.stage("assemble", wrap=True):
                timeline = build_timeline(scripts, clips, sfx, music, tone, cfg)
            with ctx.stage("export", wrap=True):
                export(
                    timeline,
                    staging,
                    {
                        "config_hash": ctx.record.config_hash,
                        "checkpoint_id": checkpoint_id,
                        "codec": codec.describe(),
                        "seeds": dict(ctx.record.seeds),
                    },
                    {
                        "run_id": ctx.record.run_id,
                        "command": "make-movie",
                        "started": ctx.record.started,
                    },
                    cfg.get("sample", "workers"),
                )
        except Exception:
            failed = os.path.join(ctx.out_dir, "failed", ctx.record.run_id)
            try:
                os.makedirs(os.path.dirname(failed), exist_ok=True)
                shutil.move(staging, failed)
            except OSError as e:
                # Staging stays in place, the stage failure is raised below
                warnings.warn(
                    "can not move staging '{0}' to '{1}' | {2}".format(staging, failed, e),
                    DegradedOutputWarning,
                )
                failed = staging
            ctx.output("failed", failed)
            raise

        target = os.path.join(ctx.out_dir, "movie")
        if os.path.isdir(target):
            shutil.rmtree(target)
        shutil.move(staging, target)
        ctx.output("movie", target)

    return _execute("make-movie", cfg, out_dir, body)
