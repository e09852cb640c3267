# -*- coding: utf-8 -*-
"""Retrieval of sound effects and background music by embeddings."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

import json
import os
import random
import re
from collections import OrderedDict
from threading import Lock

import numpy as np
from scipy.io import wavfile

from ._internal import KINDS, MUSIC, SFX, TONES, acheck, consttostr, strtoconst
from .errors import CatalogError
from .textenc import token_bucket, tokenize

INDEX_FORMAT = 1
CATALOG_FORMAT = 1

# Asset ids name files below the movie folder
_RE_ASSET_ID = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*\Z")


class EmbeddingVector:
    """Finite vector with cached euclidean norm."""

    __slots__ = "norm", "values"

    def __init__(self, values):
        values = np.array(values, dtype=np.float64).reshape(-1)
        if values.size == 0:
            raise ValueError("embedding vector is empty")
        if not np.isfinite(values).all():
            raise ValueError("embedding vector has non-finite values")
        values.setflags(write=False)
        self.norm = float(np.linalg.norm(values))
        self.values = values

    def __len__(self):
        return self.values.size

    def _get_dim(self) -> int:
        return self.values.size

    dim = property(_get_dim)


def _as_vector(value) -> EmbeddingVector:
    return value if isinstance(value, EmbeddingVector) else EmbeddingVector(value)


def cosine(a, b) -> float:
    """Cosine similarity clipped to [-1, 1], 0.0 for a zero vector."""
    a = _as_vector(a)
    b = _as_vector(b)
    if a.dim != b.dim:
        raise ValueError("dimension mismatch {0} != {1}".format(a.dim, b.dim))
    if a.norm == 0.0 or b.norm == 0.0:
        return 0.0
    return float(np.clip(np.dot(a.values, b.values) / (a.norm * b.norm), -1.0, 1.0))


def _cosines(matrix: np.ndarray, norms: np.ndarray, query: EmbeddingVector) -> np.ndarray:
    if query.norm == 0.0:
        return np.zeros(matrix.shape[0])
    return np.clip(matrix @ query.values / (norms * query.norm), -1.0, 1.0)


class HashingTextEmbedder:
    """Hashed bag of words, L2 normalized. Stateless."""

    __slots__ = "dim"

    def __init__(self, dim=64):
        acheck(int, dim=dim)
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim

    def __call__(self, text: str) -> EmbeddingVector:
        acheck(str, text=text)
        tokens = tokenize(text)
        if not text.strip() or not tokens:
            raise ValueError("text to embed is empty")
        counts = np.zeros(self.dim)
        for token in tokens:
            counts[token_bucket(token, self.dim)] += 1.0
        return EmbeddingVector(counts / np.linalg.norm(counts))


class StubVideoEmbedder:
    """
    Pooled clip statistics projected by a seeded random matrix and L2
    normalized.

    Per channel the clip gives its mean, standard deviation, mean absolute
    frame difference and the four quadrant means, all pooled over frames.
    The feature length depends on the channel count only, so clips of
    different length share one projection. A constant 1.0 feature keeps the
    projection of an all-zero clip non-zero.
    """

    __slots__ = "dim", "seed"

    def __init__(self, dim=64, seed=11):
        acheck(int, dim=dim, seed=seed)
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self.seed = seed

    def features(self, frames) -> np.ndarray:
        arr = np.asarray(frames, dtype=np.float64)
        if arr.ndim == 5:
            if arr.shape[0] != 1:
                raise ValueError("embed one clip at a time, got batch {0}".format(arr.shape[0]))
            arr = arr[0]
        if arr.ndim != 4:
            raise ValueError("clip must be [frames, channels, height, width]")
        if arr.size == 0 or arr.shape[0] == 0:
            raise ValueError("clip is empty")

        n_frames, channels, h, w = arr.shape
        means = arr.mean(axis=(0, 2, 3))
        stds = arr.std(axis=(0, 2, 3))
        if n_frames > 1:
            diffs = np.abs(np.diff(arr, axis=0)).mean(axis=(0, 2, 3))
        else:
            diffs = np.zeros(channels)

        # Quadrants collapse to the whole axis on size 1
        rows = (slice(0, max(1, h // 2)), slice(h // 2, h))
        cols = (slice(0, max(1, w // 2)), slice(w // 2, w))
        quads = [arr[:, :, r, c].mean(axis=(0, 2, 3)) for r in rows for c in cols]
        return np.concatenate([means, stds, diffs] + quads + [np.ones(1)])

    def __call__(self, frames) -> EmbeddingVector:
        feats = self.features(frames)
        rng = np.random.default_rng([self.seed, feats.size])
        proj = rng.standard_normal((self.dim, feats.size)) / np.sqrt(feats.size)
        vec = proj @ feats
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            raise ValueError("clip projects to the zero vector")
        return EmbeddingVector(vec / norm)


class AudioEmbeddingClient:
    """
    Audio proxy embedder of indexed assets.

    The default embeds the caption with the text embedder, a real audio
    encoder overrides __call__ and reads asset.path.
    """

    def __init__(self, text_embedder):
        self.text_embedder = text_embedder

    def __call__(self, asset) -> EmbeddingVector:
        return self.text_embedder(asset.caption)


def embed_text(text: str, dim=64) -> EmbeddingVector:
    """Stub text embedding, see HashingTextEmbedder."""
    return HashingTextEmbedder(dim)(text)


def embed_video(frames, dim=64, seed=11) -> EmbeddingVector:
    """Stub video embedding, see StubVideoEmbedder."""
    return StubVideoEmbedder(dim, seed)(frames)


class AudioAsset:
    """Sound effect or music track of the catalog."""

    __slots__ = "asset_id", "caption", "duration_seconds", "kind", "path", "tone"

    def __init__(
        self, asset_id: str, path: str, caption: str, kind: int, duration_seconds, tone=None
    ):
        acheck(str, asset_id=asset_id, path=path, caption=caption, tone_noneok=tone)
        if not asset_id:
            raise ValueError("asset_id is empty")
        if not _RE_ASSET_ID.match(asset_id):
            raise ValueError(
                "asset_id '{0}' may hold letters, digits, '_', '.' and '-' only "
                "and must start with a letter or digit".format(asset_id)
            )
        if kind not in KINDS:
            raise ValueError("unknown asset kind {0}".format(kind))
        if not duration_seconds > 0:
            raise ValueError(
                "duration of asset '{0}' must be > 0, got {1}".format(asset_id, duration_seconds)
            )
        if kind == MUSIC and tone not in TONES:
            raise ValueError("music asset '{0}' needs a tone category".format(asset_id))
        if kind == SFX and tone is not None:
            raise ValueError("sound effect '{0}' can not carry a tone".format(asset_id))
        self.asset_id = asset_id
        self.caption = caption
        self.duration_seconds = float(duration_seconds)
        self.kind = kind
        self.path = path
        self.tone = tone

    def __repr__(self):
        return "AudioAsset({0!r}, {1})".format(self.asset_id, consttostr(self.kind))

    def to_dict(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "path": self.path,
            "caption": self.caption,
            "kind": consttostr(self.kind),
            "tone": self.tone,
            "duration_seconds": self.duration_seconds,
        }

    @classmethod
    def from_dict(cls, data: dict):
        return cls(
            data["asset_id"],
            data["path"],
            data["caption"],
            strtoconst(data["kind"]),
            data["duration_seconds"],
            data.get("tone"),
        )


class RetrievalResult:
    """Ranked (asset_id, score) pairs with the component scores."""

    __slots__ = "components", "fusion_weight", "ranked"

    def __init__(self, ranked, components=None, fusion_weight=0.0):
        self.components = components or {}
        self.fusion_weight = fusion_weight
        self.ranked = ranked

    def __len__(self):
        return len(self.ranked)

    def ids(self) -> list:
        return [asset_id for asset_id, _ in self.ranked]

    def top(self):
        """Best asset_id or None."""
        return self.ranked[0][0] if self.ranked else None


def _rank(ids: list, scores: np.ndarray, k: int) -> list:
    order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
    return [(ids[i], float(scores[i])) for i in order[:k]]


class AudioIndex:
    """
    Caption and audio proxy vectors of audio assets.

    Searches work on a snapshot and may run concurrently, additions hold
    the lock.
    """

    def __init__(self, dim=64, text_embedder=None, video_embedder=None, audio_embedder=None):
        acheck(int, dim=dim)
        self.dim = dim
        self.text_embedder = text_embedder or HashingTextEmbedder(dim)
        self.video_embedder = video_embedder or StubVideoEmbedder(dim)
        self.audio_embedder = audio_embedder or AudioEmbeddingClient(self.text_embedder)
        self._entries = OrderedDict()
        self._lck = Lock()

    def __contains__(self, asset_id):
        return asset_id in self._entries

    def __len__(self):
        return len(self._entries)

    def _check_dim(self, vec: EmbeddingVector) -> None:
        if vec.dim != self.dim:
            raise ValueError(
                "dimension mismatch, index has {0}, vector {1}".format(self.dim, vec.dim)
            )

    def add(self, asset: AudioAsset, caption_vec=None, audio_vec=None) -> None:
        """
        Add an asset with its vectors, missing vectors are embedded.

        :param asset: AudioAsset with new asset_id
        :param caption_vec: Optional precomputed caption vector
        :param audio_vec: Optional precomputed audio proxy vector
        """
        acheck(AudioAsset, asset=asset)
        if caption_vec is None:
            caption_vec = self.text_embedder(asset.caption)
        if audio_vec is None:
            audio_vec = self.audio_embedder(asset)
        caption_vec = _as_vector(caption_vec)
        audio_vec = _as_vector(audio_vec)
        for vec in (caption_vec, audio_vec):
            self._check_dim(vec)
            if vec.norm == 0.0:
                raise ValueError("asset '{0}' has a zero vector".format(asset.asset_id))

        with self._lck:
            if asset.asset_id in self._entries:
                raise ValueError("duplicate asset_id '{0}'".format(asset.asset_id))
            self._entries[asset.asset_id] = (caption_vec, audio_vec, asset)

    def assets(self, kind=None) -> list:
        """Assets in insertion order, optionally of one kind."""
        with self._lck:
            entries = list(self._entries.values())
        return [e[2] for e in entries if kind is None or e[2].kind == kind]

    def get(self, asset_id: str) -> AudioAsset:
        return self._entries[asset_id][2]

    def vectors(self, asset_id: str) -> tuple:
        """(caption vector, audio proxy vector) of an asset."""
        caption_vec, audio_vec, _ = self._entries[asset_id]
        return caption_vec, audio_vec

    def _table(self, kind, use: int):
        with self._lck:
            entries = [e for e in self._entries.values() if kind is None or e[2].kind == kind]
        ids = [e[2].asset_id for e in entries]
        if not entries:
            return ids, np.zeros((0, self.dim)), np.zeros(0)
        matrix = np.stack([e[use].values for e in entries])
        norms = np.array([e[use].norm for e in entries])
        return ids, matrix, norms

    def scores(self, query, kind=None, use_audio=False) -> tuple:
        """All (ids, cosine scores) against caption or audio proxy vectors."""
        query = _as_vector(query)
        self._check_dim(query)
        ids, matrix, norms = self._table(kind, 1 if use_audio else 0)
        return ids, _cosines(matrix, norms, query)

    def search(self, query, k: int, kind=None, use_audio=False) -> RetrievalResult:
        acheck(int, k=k)
        if k < 1:
            raise ValueError("k must be >= 1")
        ids, scores = self.scores(query, kind, use_audio)
        return RetrievalResult(_rank(ids, scores, k))


def index_add(index: AudioIndex, asset: AudioAsset) -> None:
    """Add asset to index, see AudioIndex.add."""
    acheck(AudioIndex, index=index)
    index.add(asset)


def index_search(index: AudioIndex, query, k: int, kind=None) -> RetrievalResult:
    """
    Top k assets by cosine similarity of their caption vectors.

    :param index: AudioIndex
    :param query: EmbeddingVector or array of the index dimension
    :param k: Number of results
    :param kind: SFX, MUSIC or None for all
    :return: RetrievalResult, ties ordered by asset_id
    """
    acheck(AudioIndex, index=index)
    return index.search(query, k, kind)


def retrieve_sfx(scene, clip, index: AudioIndex, k=1, lam=0.5) -> RetrievalResult:
    """
    Sound effects for a scene by text and video similarity.

    score = (1 - lam) * cos(text, caption) + lam * cos(video, audio proxy)

    :param scene: SceneScript
    :param clip: Frames [F, C, H, W] of the scene
    :param index: AudioIndex
    :param k: Number of results
    :param lam: Weight of the video route in [0, 1]
    :return: RetrievalResult with component scores per asset
    """
    acheck(AudioIndex, index=index)
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must be in [0, 1], got {0}".format(lam))
    if not index.assets(SFX):
        raise CatalogError("index has no sound effects")

    ids, text_scores = index.scores(index.text_embedder(scene.text), SFX)
    _, video_scores = index.scores(index.video_embedder(clip), SFX, use_audio=True)
    fused = (1.0 - lam) * text_scores + lam * video_scores

    result = RetrievalResult(
        _rank(ids, fused, k),
        {i: (float(t), float(v)) for i, t, v in zip(ids, text_scores, video_scores)},
        float(lam),
    )
    return result


def select_music(tone, index: AudioIndex, seed: int) -> AudioAsset:
    """
    One background track for the whole movie.

    Tracks tagged with the tone are drawn by the seed, without such a track
    the tone word is searched among the music captions.

    :param tone: ToneLabel or category string
    :param index: AudioIndex
    :param seed: Seed of the draw
    :return: AudioAsset of kind MUSIC
    """
    acheck(AudioIndex, index=index)
    category = getattr(tone, "category", tone)
    if category not in TONES:
        raise ValueError("unknown tone category '{0}'".format(category))

    music = index.assets(MUSIC)
    if not music:
        raise CatalogError("catalog has no music tracks")

    tagged = sorted((a for a in music if a.tone == category), key=lambda a: a.asset_id)
    if tagged:
        return random.Random(seed).choice(tagged)

    result = index.search(index.text_embedder(category), 1, MUSIC)
    return index.get(result.top())


def load_catalog(path: str) -> list:
    """
    Read a json audio catalog.

    Paths are relative to the catalog file. Missing durations are read from
    the PCM wave file.

    :param path: Catalog file
    :return: <class 'list'> of AudioAsset
    """
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, ValueError) as e:
        raise CatalogError("can not read catalog '{0}' | {1}".format(path, e))

    items = data.get("assets", []) if isinstance(data, dict) else data
    base = os.path.dirname(os.path.abspath(path))
    rc = []
    seen = set()
    for item in items:
        try:
            asset_path = os.path.join(base, item["path"])
            if not os.path.isfile(asset_path):
                raise CatalogError("audio file '{0}' does not exist".format(asset_path))
            duration = item.get("duration_seconds", item.get("duration"))
            if duration is None:
                duration = wav_duration(asset_path)
            asset = AudioAsset(
                item["asset_id"],
                asset_path,
                item["caption"],
                strtoconst(item["kind"]),
                duration,
                item.get("tone"),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise CatalogError("bad catalog entry {0} | {1}".format(item, e))
        if asset.asset_id in seen:
            raise CatalogError("duplicate asset_id '{0}' in catalog".format(asset.asset_id))
        seen.add(asset.asset_id)
        rc.append(asset)
    return rc


def write_catalog(assets, path: str) -> None:
    """Write assets as json catalog with paths relative to the file."""
    base = os.path.dirname(os.path.abspath(path))
    items = []
    for asset in assets:
        item = asset.to_dict()
        item["path"] = os.path.relpath(os.path.abspath(asset.path), base)
        items.append(item)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"version": CATALOG_FORMAT, "assets": items}, fh, indent=2, sort_keys=True)


def wav_duration(path: str) -> float:
    """Length of a PCM wave file in seconds."""
    rate, data = wavfile.read(path)
    if rate <= 0 or len(data) == 0:
        raise ValueError("wave file '{0}' is empty".format(path))
    return len(data) / float(rate)


def build_index(assets, dim=64, text_embedder=None, video_embedder=None, audio_embedder=None):
    """
    Index all assets.

    :return: AudioIndex
    """
    index = AudioIndex(dim, text_embedder, video_embedder, audio_embedder)
    for asset in assets:
        index.add(asset)
    return index


def save_index(index: AudioIndex, path: str) -> None:
    """Write the index as json, floats round trip exactly."""
    acheck(AudioIndex, index=index)
    entries = []
    for asset in index.assets():
        caption_vec, audio_vec = index.vectors(asset.asset_id)
        entries.append(
            {
                "asset": asset.to_dict(),
                "caption_vec": caption_vec.values.tolist(),
                "audio_vec": audio_vec.values.tolist(),
            }
        )
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"format_version": INDEX_FORMAT, "dim": index.dim, "entries": entries}, fh)


def load_index(path: str, text_embedder=None, video_embedder=None, audio_embedder=None):
    """Read an index written by save_index."""
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if data.get("format_version") != INDEX_FORMAT:
        raise CatalogError("unsupported index format {0}".format(data.get("format_version")))

    index = AudioIndex(int(data["dim"]), text_embedder, video_embedder, audio_embedder)
    for entry in data["entries"]:
        index.add(
            AudioAsset.from_dict(entry["asset"]),
            EmbeddingVector(entry["caption_vec"]),
            EmbeddingVector(entry["audio_vec"]),
        )
    return index
