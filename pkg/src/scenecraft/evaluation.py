# -*- coding: utf-8 -*-
"""Frechet distance, text video similarity and motion energy."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

import json
import warnings

import numpy as np
from scipy import linalg

from ._internal import acheck
from .audio_retrieval import EmbeddingVector, HashingTextEmbedder, StubVideoEmbedder

# Published full scale results, documentation only. Desk scale values are
# computed with stub extractors and are not comparable.
REFERENCE_FVD = 317.52
REFERENCE_CLIPSIM = 0.3058

# Eigenvalues below this are treated as zero in matrix square roots
EIG_TOL = 1e-10


class FeatureSet:
    """Features [n_samples, feat_dim] of one extractor."""

    __slots__ = "extractor_id", "features"

    def __init__(self, features, extractor_id: str):
        acheck(str, extractor_id=extractor_id)
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if features.ndim != 2:
            raise ValueError("features must be [n_samples, feat_dim]")
        if not np.isfinite(features).all():
            raise ValueError("features contain non-finite values")
        self.extractor_id = extractor_id
        self.features = features

    def __len__(self):
        return self.features.shape[0]


class GaussianStats:
    """Mean and covariance of a feature distribution."""

    __slots__ = "cov", "mean"

    def __init__(self, mean, cov):
        mean = np.asarray(mean, dtype=np.float64).reshape(-1)
        cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
        if cov.shape != (mean.size, mean.size):
            raise ValueError(
                "covariance shape {0} does not fit mean of {1}".format(cov.shape, mean.size)
            )
        if not (np.isfinite(mean).all() and np.isfinite(cov).all()):
            raise ValueError("statistics contain non-finite values")
        if np.abs(cov - cov.T).max(initial=0.0) > 1e-8:
            raise ValueError("covariance is not symmetric")
        if (np.diag(cov) < 0).any():
            raise ValueError("covariance has negative variances")
        self.cov = cov
        self.mean = mean


def gaussian_stats(fs: FeatureSet) -> GaussianStats:
    """
    Sample mean and unbiased covariance.

    :param fs: FeatureSet with at least 2 samples
    :return: GaussianStats
    """
    acheck(FeatureSet, fs=fs)
    if len(fs) < 2:
        raise ValueError("need at least 2 samples, got {0}".format(len(fs)))
    cov = np.atleast_2d(np.cov(fs.features, rowvar=False, ddof=1))
    return GaussianStats(fs.features.mean(axis=0), (cov + cov.T) / 2.0)


def _psd_eigvals(m: np.ndarray) -> np.ndarray:
    w = linalg.eigh((m + m.T) / 2.0, eigvals_only=True)
    if w.min(initial=0.0) < -1e-6 * max(1.0, np.abs(w).max(initial=0.0)):
        warnings.warn(
            "matrix is not positive semi definite, min eigenvalue {0:.3g}".format(w.min()),
            RuntimeWarning,
        )
    return np.clip(w, 0.0, None)


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Square root of a symmetric positive semi definite matrix."""
    w, v = linalg.eigh((m + m.T) / 2.0)
    w = np.where(w > EIG_TOL, w, 0.0)
    return (v * np.sqrt(w)) @ v.T


def frechet_distance(a: GaussianStats, b: GaussianStats) -> float:
    """
    Frechet distance of two gaussians.

    |mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2)), where the trace of
    the root is taken from the eigenvalues of S_a^(1/2) S_b S_a^(1/2).

    :return: <class 'float'> distance >= 0
    """
    acheck(GaussianStats, a=a, b=b)
    if a.mean.size != b.mean.size:
        raise ValueError("dimension mismatch {0} != {1}".format(a.mean.size, b.mean.size))

    diff = a.mean - b.mean
    root_a = psd_sqrt(a.cov)
    tr_root = np.sqrt(_psd_eigvals(root_a @ b.cov @ root_a)).sum()
    rc = float(diff @ diff + np.trace(a.cov) + np.trace(b.cov) - 2.0 * tr_root)

    if not np.isfinite(rc):
        raise ValueError("frechet distance is not finite")
    return max(rc, 0.0)


def _unit(vec) -> np.ndarray:
    values = vec.values if isinstance(vec, EmbeddingVector) else np.asarray(vec, np.float64)
    norm = np.linalg.norm(values)
    if norm == 0.0:
        raise ValueError("embedding is the zero vector")
    return values / norm


def clipsim(scene_texts, clips, text_embedder=None, video_embedder=None) -> float:
    """
    Mean cosine similarity of text and clip embeddings.

    :param scene_texts: Texts
    :param clips: One clip [F, C, H, W] per text
    :param text_embedder: text -> vector, hashing stub if None
    :param video_embedder: clip -> vector, video stub if None
    :return: <class 'float'> in [-1, 1]
    """
    scene_texts = list(scene_texts)
    clips = list(clips)
    if len(scene_texts) != len(clips):
        raise ValueError("got {0} texts for {1} clips".format(len(scene_texts), len(clips)))
    if not clips:
        raise ValueError("nothing to compare")
    text_embedder = text_embedder or HashingTextEmbedder()
    video_embedder = video_embedder or StubVideoEmbedder()

    values = []
    for text, clip in zip(scene_texts, clips):
        t = _unit(text_embedder(text))
        v = _unit(video_embedder(clip))
        if t.size != v.size:
            raise ValueError("embedders differ in dimension {0} != {1}".format(t.size, v.size))
        values.append(float(np.clip(t @ v, -1.0, 1.0)))
    return float(np.mean(values))


def motion_energy(clip) -> float:
    """
    Mean absolute difference of neighbouring frames.

    :param clip: [F, C, H, W] or [B, F, C, H, W]
    :return: <class 'float'> >= 0
    """
    arr = np.asarray(clip, dtype=np.float64)
    if arr.ndim not in (4, 5):
        raise ValueError("clip must be [frames, channels, height, width] or batched")
    axis = arr.ndim - 4
    if arr.shape[axis] < 2:
        raise ValueError("motion needs at least 2 frames")
    return float(np.abs(np.diff(arr, axis=axis)).mean())


def extract_features(clips, extractor=None, extractor_id="stub-video") -> FeatureSet:
    """
    Embed every clip into one FeatureSet.

    :param clips: Iterable of clips [F, C, H, W]
    :param extractor: clip -> vector, video stub if None
    :param extractor_id: Name stored with the features
    :return: FeatureSet
    """
    extractor = extractor or StubVideoEmbedder()
    rows = []
    for clip in clips:
        vec = extractor(clip)
        rows.append(vec.values if isinstance(vec, EmbeddingVector) else np.asarray(vec))
    if not rows:
        raise ValueError("no clips to extract features from")
    return FeatureSet(np.stack(rows), extractor_id)


def metric_entry(metric: str, value: float, extractor_id="", **counts) -> dict:
    """One metrics report record."""
    rc = {"metric": metric, "value": float(value), "extractor_id": extractor_id}
    rc.update(counts)
    return rc


def write_report(path: str, entries) -> dict:
    """
    Write metric entries as json.

    :return: <class 'dict'> written report
    """
    report = {
        "metrics": list(entries),
        "reference": {"fvd": REFERENCE_FVD, "clipsim": REFERENCE_CLIPSIM},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report
