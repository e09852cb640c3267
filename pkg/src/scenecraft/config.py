# -*- coding: utf-8 -*-
"""Pipeline configuration from ini files."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

import hashlib
import json
from configparser import ConfigParser, Error as ConfigParserError
from os import R_OK, access

from ._internal import BASE_PRETRAIN, acheck, strtoconst
from .diffusion import SampleConfig, make_schedule
from .errors import ConfigError
from .trainer import TrainConfig
from .video_model import ModelConfig

# Value types of the schema
_STR = "str"
_INT = "int"
_FLOAT = "float"
_BOOL = "bool"
_INTLIST = "intlist"

# section -> key -> (type, default)
SCHEMA = {
    "llm": {
        "provider": (_STR, "stub"),
        "endpoint": (_STR, ""),
        "api_key_env": (_STR, "SCENECRAFT_LLM_KEY"),
        "retries": (_INT, 2),
        "timeout": (_FLOAT, 30.0),
        "model": (_STR, ""),
        "temperature": (_FLOAT, 0.7),
    },
    "textenc": {
        "provider": (_STR, "stub"),
        "max_tokens": (_INT, 8),
        "buckets": (_INT, 512),
        "seed": (_INT, 7),
    },
    "model": {
        "in_channels": (_INT, 3),
        "base_channels": (_INT, 32),
        "channel_mults": (_INTLIST, (1, 2)),
        "frames": (_INT, 8),
        "height": (_INT, 8),
        "width": (_INT, 16),
        "n_domains": (_INT, 2),
        "text_embed_dim": (_INT, 32),
        "time_embed_dim": (_INT, 64),
        "attn_levels": (_INTLIST, ()),
        "attn_heads": (_INT, 4),
        "checkpoint": (_STR, ""),
        "codec": (_STR, "identity"),
        "codec_scale": (_FLOAT, 1.0),
    },
    "schedule": {
        "steps": (_INT, 100),
        "beta_min": (_FLOAT, 1e-3),
        "beta_max": (_FLOAT, 0.2),
    },
    "script": {
        "n_scenes": (_INT, 10),
        "scene_seconds": (_FLOAT, 1.0),
    },
    "train": {
        "steps": (_INT, 200),
        "batch": (_INT, 4),
        "learning_rate": (_FLOAT, 1e-3),
        "ema_decay": (_FLOAT, 0.999),
        "uncond_prob": (_FLOAT, 0.1),
        "temporal_domain": (_INT, 0),
        "smoothing": (_FLOAT, 0.9),
        "prefetch": (_INT, 2),
        "augment": (_BOOL, False),
    },
    "sample": {
        "steps": (_INT, 25),
        "guidance_scale": (_FLOAT, 3.0),
        "domain_id": (_INT, 0),
        "workers": (_INT, 1),
        "use_ema": (_BOOL, False),
    },
    "audio": {
        "catalog": (_STR, ""),
        "index": (_STR, ""),
        "fusion_lambda": (_FLOAT, 0.5),
        "k": (_INT, 1),
        "embed_dim": (_INT, 64),
        "seed": (_INT, 11),
    },
    "assembly": {
        "fps": (_FLOAT, 8.0),
        "music_gain_db": (_FLOAT, -12.0),
        "sfx_gain_db": (_FLOAT, -6.0),
        "upscaler": (_STR, "identity"),
        "upscale_factor": (_INT, 4),
    },
    "eval": {
        "extractor": (_STR, "stub-video"),
    },
    "io": {
        "out_dir": (_STR, "out"),
        "seed": (_INT, 0),
        "debug": (_INT, 0),
    },
}


def _convert(cp: ConfigParser, section: str, key: str, value_type: str):
    try:
        if value_type == _INT:
            return cp.getint(section, key)
        if value_type == _FLOAT:
            return cp.getfloat(section, key)
        if value_type == _BOOL:
            return cp.getboolean(section, key)
        raw = cp.get(section, key).strip()
        if value_type == _INTLIST:
            return tuple(int(v) for v in raw.split(",") if v.strip())
        return raw
    except ValueError:
        raise ConfigError(
            "value '{0}' of [{1}] {2} is not of type {3}".format(
                cp.get(section, key, raw=True), section, key, value_type
            )
        )


class PipelineConfig:
    """
    Validated configuration of all pipeline stages.

    Values are read with get(section, key). Every section and key of SCHEMA
    exists, missing ones carry the default.
    """

    __slots__ = "_values", "path"

    def __init__(self, values: dict, path=""):
        self._values = values
        self.path = path

    def get(self, section: str, key: str):
        """
        Value of a config key.

        :param section: Section name
        :param key: Key in section
        :return: Value converted to the schema type
        """
        try:
            return self._values[section][key]
        except KeyError:
            raise ConfigError("unknown config key [{0}] {1}".format(section, key))

    def to_dict(self) -> dict:
        """Nested dict with lists instead of tuples."""
        return {
            section: {
                key: list(value) if isinstance(value, tuple) else value
                for key, value in keys.items()
            }
            for section, keys in self._values.items()
        }

    def config_hash(self) -> str:
        """sha256 of the canonical json of all resolved values."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def replace(self, section: str, key: str, value) -> "PipelineConfig":
        """Copy with one value replaced, for command line flags."""
        self.get(section, key)
        values = {s: dict(keys) for s, keys in self._values.items()}
        values[section][key] = value
        rc = PipelineConfig(values, self.path)
        rc.validate()
        return rc

    def model_config(self):
        """ModelConfig of the [model] section."""
        m = self._values["model"]
        try:
            return ModelConfig(
                in_channels=m["in_channels"],
                base_channels=m["base_channels"],
                channel_mults=m["channel_mults"],
                frames=m["frames"],
                height=m["height"],
                width=m["width"],
                n_domains=m["n_domains"],
                text_embed_dim=m["text_embed_dim"],
                time_embed_dim=m["time_embed_dim"],
                attn_levels=m["attn_levels"] or None,
                attn_heads=m["attn_heads"],
            )
        except (TypeError, ValueError) as e:
            raise ConfigError("section [model] is invalid | {0}".format(e))

    def schedule(self):
        """Noise schedule of the [schedule] section."""
        s = self._values["schedule"]
        try:
            return make_schedule(s["steps"], s["beta_min"], s["beta_max"])
        except (TypeError, ValueError) as e:
            raise ConfigError("section [schedule] is invalid | {0}".format(e))

    def train_config(self, stage, seed=None):
        """
        TrainConfig of the [train] section.

        :param stage: Stage constant or name
        :param seed: Seed, io.seed if None
        """
        t = self._values["train"]
        try:
            if isinstance(stage, str):
                stage = strtoconst(stage)
            return TrainConfig(
                stage,
                steps=t["steps"],
                batch=t["batch"],
                learning_rate=t["learning_rate"],
                seed=self._values["io"]["seed"] if seed is None else seed,
                ema_decay=t["ema_decay"],
                uncond_prob=t["uncond_prob"],
                temporal_domain=t["temporal_domain"],
                smoothing=t["smoothing"],
                prefetch=t["prefetch"],
                augment=t["augment"],
            )
        except (TypeError, ValueError) as e:
            raise ConfigError("section [train] is invalid | {0}".format(e))

    def sample_config(self, seed=None):
        """SampleConfig of the [sample] section."""
        s = self._values["sample"]
        try:
            return SampleConfig(
                steps=s["steps"],
                guidance_scale=s["guidance_scale"],
                seed=self._values["io"]["seed"] if seed is None else seed,
                domain_id=s["domain_id"],
            )
        except (TypeError, ValueError) as e:
            raise ConfigError("section [sample] is invalid | {0}".format(e))

    def validate(self) -> None:
        """
        Check value ranges and build all stage configs once.

        Raises ConfigError naming section and key.
        """
        v = self._values
        mc = self.model_config()
        sched = self.schedule()
        self.train_config(BASE_PRETRAIN)
        sconf = self.sample_config()

        if sconf.steps > sched.T:
            raise ConfigError(
                "[sample] steps {0} exceeds [schedule] steps {1}".format(sconf.steps, sched.T)
            )
        if not 0 <= v["sample"]["domain_id"] < mc.n_domains:
            raise ConfigError("[sample] domain_id {0} is unknown".format(v["sample"]["domain_id"]))
        if not 0 <= v["train"]["temporal_domain"] < mc.n_domains:
            raise ConfigError(
                "[train] temporal_domain {0} is unknown".format(v["train"]["temporal_domain"])
            )

        checks = (
            ("llm", "provider", v["llm"]["provider"] in ("stub", "http")),
            ("llm", "retries", v["llm"]["retries"] >= 0),
            ("llm", "timeout", v["llm"]["timeout"] > 0),
            ("llm", "endpoint", v["llm"]["provider"] != "http" or bool(v["llm"]["endpoint"])),
            ("textenc", "provider", v["textenc"]["provider"] == "stub"),
            ("model", "codec", v["model"]["codec"] in ("identity", "scaled")),
            ("model", "codec_scale", 0.0 < v["model"]["codec_scale"] <= 1.0),
            ("textenc", "max_tokens", v["textenc"]["max_tokens"] >= 1),
            ("textenc", "buckets", v["textenc"]["buckets"] >= 1),
            ("script", "n_scenes", v["script"]["n_scenes"] >= 1),
            ("script", "scene_seconds", v["script"]["scene_seconds"] > 0),
            ("train", "prefetch", v["train"]["prefetch"] >= 0),
            ("sample", "workers", v["sample"]["workers"] >= 1),
            ("audio", "fusion_lambda", 0.0 <= v["audio"]["fusion_lambda"] <= 1.0),
            ("audio", "k", v["audio"]["k"] >= 1),
            ("audio", "embed_dim", v["audio"]["embed_dim"] >= 1),
            ("assembly", "fps", v["assembly"]["fps"] > 0),
            ("assembly", "upscaler", v["assembly"]["upscaler"] in ("identity", "nearest")),
            ("assembly", "upscale_factor", v["assembly"]["upscale_factor"] >= 1),
            ("eval", "extractor", v["eval"]["extractor"] == "stub-video"),
            ("io", "out_dir", bool(v["io"]["out_dir"])),
            ("io", "debug", v["io"]["debug"] in (-1, 0, 1)),
        )
        for section, key, okay in checks:
            if not okay:
                raise ConfigError(
                    "invalid value '{0}' for [{1}] {2}".format(v[section][key], section, key)
                )


def default_config() -> PipelineConfig:
    """Configuration with all defaults."""
    return load_config()


def load_config(path=None, overrides=None) -> PipelineConfig:
    """
    Read and validate a config file.

    :param path: Ini file, defaults only if None
    :param overrides: dict section -> dict key -> raw string value
    :return: PipelineConfig
    """
    acheck(str, path_noneok=path)
    cp = ConfigParser(interpolation=None)
    if path is not None:
        if not access(path, R_OK):
            raise ConfigError("can not access config file '{0}'".format(path))
        try:
            with open(path, "r", encoding="utf-8") as fh:
                cp.read_file(fh)
        except ConfigParserError as e:
            raise ConfigError("config file '{0}' is malformed | {1}".format(path, e))
    if overrides:
        try:
            cp.read_dict(overrides)
        except ConfigParserError as e:
            raise ConfigError("invalid config override | {0}".format(e))

    if cp.defaults():
        raise ConfigError(
            "unknown config key [DEFAULT] {0}".format(sorted(cp.defaults())[0])
        )

    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError("unknown config section [{0}]".format(section))
        for key in cp.options(section):
            if key not in SCHEMA[section]:
                raise ConfigError("unknown config key [{0}] {1}".format(section, key))

    values = {}
    for section, keys in SCHEMA.items():
        values[section] = {}
        for key, (value_type, default) in keys.items():
            if cp.has_option(section, key):
                values[section][key] = _convert(cp, section, key, value_type)
            else:
                values[section][key] = default

    rc = PipelineConfig(values, path or "")
    rc.validate()
    return rc
