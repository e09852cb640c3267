# -*- coding: utf-8 -*-
"""Tests of audio index, sound effect retrieval and music selection."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

import json
import os

import numpy as np

from scenecraft._internal import MUSIC, SFX
from scenecraft.audio_retrieval import (
    AudioAsset,
    AudioIndex,
    EmbeddingVector,
    HashingTextEmbedder,
    StubVideoEmbedder,
    build_index,
    cosine,
    embed_text,
    embed_video,
    index_add,
    index_search,
    load_catalog,
    load_index,
    retrieve_sfx,
    save_index,
    select_music,
    wav_duration,
)
from scenecraft.errors import CatalogError
from scenecraft.script_gen import SceneScript, ToneLabel
from .. import TestScenecraft
from ..helper import make_assets, make_catalog, write_wav


def unit_vectors(n, dim, seed):
    rng = np.random.default_rng(seed)
    rc = rng.standard_normal((n, dim))
    return rc / np.linalg.norm(rc, axis=1, keepdims=True)


class TestEmbeddings(TestScenecraft):
    def test_cosine(self):
        self.assertEqual(cosine([1.0, 0.0], [0.0, 2.0]), 0.0)
        self.assertAlmostEqual(cosine([1.0, 2.0], [2.0, 4.0]), 1.0)
        self.assertAlmostEqual(cosine([1.0, 2.0], [-1.0, -2.0]), -1.0)
        self.assertEqual(cosine([0.0, 0.0], [1.0, 1.0]), 0.0)
        with self.assertRaises(ValueError):
            cosine([1.0], [1.0, 2.0])
        with self.assertRaises(ValueError):
            EmbeddingVector([])
        with self.assertRaises(ValueError):
            EmbeddingVector([1.0, float("nan")])

    def test_text_embedder(self):
        embedder = HashingTextEmbedder(32)
        vec = embedder("car engine roaring")
        self.assertEqual(vec.dim, 32)
        self.assertAlmostEqual(vec.norm, 1.0)
        self.assertTrue(np.array_equal(vec.values, embed_text("Car, engine ROARING!", 32).values))
        with self.assertRaises(ValueError):
            embedder("  ")
        with self.assertRaises(ValueError):
            embedder("?!")

    def test_video_embedder(self):
        embedder = StubVideoEmbedder(16, seed=3)
        clip = np.random.default_rng(1).uniform(-1, 1, (4, 3, 8, 16))
        vec = embedder(clip)
        self.assertAlmostEqual(vec.norm, 1.0)
        self.assertTrue(np.array_equal(embedder(clip[None]).values, vec.values))
        self.assertFalse(np.array_equal(StubVideoEmbedder(16, seed=4)(clip).values, vec.values))

        # Constant feature keeps a black clip embeddable
        self.assertAlmostEqual(embedder(np.zeros((4, 3, 8, 16))).norm, 1.0)
        with self.assertRaises(ValueError):
            embedder(np.zeros((2, 4, 3, 8, 16)))
        with self.assertRaises(ValueError):
            embedder(np.zeros((3, 8, 16)))

        self.assertTrue(np.array_equal(embed_video(clip, 16, 3).values, vec.values))

    def test_video_embedder_length(self):
        """Clip length alone does not move the embedding."""
        embedder = StubVideoEmbedder(64)
        for frames in (1, 4, 8):
            self.assertEqual(embedder.features(np.zeros((frames, 3, 8, 16))).size, 22)

        long = embedder(np.full((8, 3, 8, 16), 0.5))
        short = embedder(np.full((4, 3, 8, 16), 0.5))
        self.assertAlmostEqual(cosine(long, short), 1.0)

        # Repeating every frame keeps the pooled statistics of a still clip
        clip = np.random.default_rng(2).uniform(-1, 1, (1, 3, 8, 16))
        self.assertAlmostEqual(cosine(embedder(clip), embedder(np.repeat(clip, 6, axis=0))), 1.0)

        # Motion is seen
        moving = np.random.default_rng(4).uniform(-1, 1, (4, 3, 8, 16))
        self.assertLess(cosine(embedder(moving), embedder(moving[:1])), 1.0 - 1e-6)

        # Height and width of one pixel still give four quadrants
        self.assertEqual(embedder.features(np.ones((2, 3, 1, 1))).size, 22)


class TestAudioIndex(TestScenecraft):
    def asset(self, asset_id, kind=SFX, tone=None, caption="a sound"):
        return AudioAsset(asset_id, asset_id + ".wav", caption, kind, 1.0, tone)

    def test_search_brute_force(self):
        """Top k equals the brute force ranking."""
        dim = 16
        vectors = unit_vectors(1000, dim, seed=1)
        index = AudioIndex(dim)
        for i, vec in enumerate(vectors):
            index.add(self.asset("a{0:04}".format(i)), vec, vec)

        for query in unit_vectors(50, dim, seed=2):
            result = index_search(index, query, 10)
            expected = sorted(range(1000), key=lambda i: (-cosine(vectors[i], query), i))[:10]
            self.assertEqual(result.ids(), ["a{0:04}".format(i) for i in expected])
            for (_, score), i in zip(result.ranked, expected):
                self.assertAlmostEqual(score, cosine(vectors[i], query))

        small = AudioIndex(dim)
        for i, vec in enumerate(vectors[:12]):
            small.add(self.asset("a{0:04}".format(i)), vec, vec)
        self.assertEqual(len(index_search(small, vectors[0], 50)), 12)

    def test_ties_and_kinds(self):
        index = AudioIndex(4)
        vec = [1.0, 0.0, 0.0, 0.0]
        index.add(self.asset("b"), vec, vec)
        index.add(self.asset("a"), vec, vec)
        index.add(self.asset("m", MUSIC, "epic"), vec, vec)
        self.assertEqual(index_search(index, vec, 3).ids(), ["a", "b", "m"])
        self.assertEqual(index_search(index, vec, 3, SFX).ids(), ["a", "b"])
        self.assertEqual(index_search(index, vec, 3, MUSIC).ids(), ["m"])
        self.assertEqual([a.asset_id for a in index.assets()], ["b", "a", "m"])

        # Zero query scores all assets 0
        result = index_search(index, [0.0] * 4, 1)
        self.assertEqual(result.ranked, [("a", 0.0)])

    def test_add_errors(self):
        index = AudioIndex(4)
        index_add(index, self.asset("a"))
        self.assertIn("a", index)
        with self.assertRaises(ValueError):
            index_add(index, self.asset("a"))
        with self.assertRaises(ValueError):
            index.add(self.asset("b"), [1.0, 0.0], [1.0, 0.0])
        with self.assertRaises(ValueError):
            index.add(self.asset("c"), [0.0] * 4, [1.0, 0.0, 0.0, 0.0])
        with self.assertRaises(ValueError):
            index_search(index, [1.0, 0.0, 0.0, 0.0], 0)
        with self.assertRaises(ValueError):
            index_search(index, [1.0, 0.0], 1)

    def test_save_load(self):
        index = build_index(make_assets(self.path("assets")), dim=16)
        path = self.path("index.json")
        save_index(index, path)
        loaded = load_index(path)
        self.assertEqual(len(loaded), len(index))
        for asset in index.assets():
            for a, b in zip(index.vectors(asset.asset_id), loaded.vectors(asset.asset_id)):
                self.assertTrue(np.array_equal(a.values, b.values))
            self.assertEqual(loaded.get(asset.asset_id).to_dict(), asset.to_dict())

        with open(path, "w") as fh:
            json.dump({"format_version": 99}, fh)
        with self.assertRaises(CatalogError):
            load_index(path)

    def test_asset_errors(self):
        with self.assertRaises(ValueError):
            AudioAsset("", "x.wav", "c", SFX, 1.0)
        with self.assertRaises(ValueError):
            AudioAsset("m", "x.wav", "c", MUSIC, 1.0)
        with self.assertRaises(ValueError):
            AudioAsset("s", "x.wav", "c", SFX, 1.0, "epic")
        with self.assertRaises(ValueError):
            AudioAsset("s", "x.wav", "c", SFX, 0.0)
        with self.assertRaises(ValueError):
            AudioAsset("s", "x.wav", "c", 99, 1.0)

    def test_asset_ids(self):
        """Asset ids are plain file name stems."""
        for asset_id in ("engine", "Jet_2", "rain-heavy.v1", "7"):
            self.assertEqual(AudioAsset(asset_id, "x.wav", "c", SFX, 1.0).asset_id, asset_id)
        for asset_id in ("../x", "..", ".hidden", "a/b", "a\\b", "/abs", "sp ace", "-x", "a\n"):
            with self.assertRaises(ValueError, msg=asset_id):
                AudioAsset(asset_id, "x.wav", "c", SFX, 1.0)


class TestRetrieveSfx(TestScenecraft):
    def setUp(self):
        super().setUp()
        self.index = build_index(make_assets(self.path("assets")), dim=64)
        self.scene = SceneScript(0, "a car engine roaring", 1.0)
        self.clip = np.random.default_rng(3).uniform(-1, 1, (4, 3, 8, 16))

    def test_fusion(self):
        """Fused score mixes the text and video routes."""
        result = retrieve_sfx(self.scene, self.clip, self.index, k=4, lam=0.25)
        self.assertEqual(sorted(result.components), ["crowd", "engine", "jet", "rain"])
        self.assertEqual(result.fusion_weight, 0.25)
        for asset_id, score in result.ranked:
            text, video = result.components[asset_id]
            self.assertAlmostEqual(score, 0.75 * text + 0.25 * video)
        scores = [score for _, score in result.ranked]
        self.assertEqual(scores, sorted(scores, reverse=True))

        self.assertEqual(len(retrieve_sfx(self.scene, self.clip, self.index, k=2)), 2)

    def test_degenerate_weights(self):
        """Weight 0 ranks by text only, weight 1 by video only."""
        text_only = retrieve_sfx(self.scene, self.clip, self.index, k=4, lam=0.0)
        by_text = sorted(text_only.components, key=lambda i: (-text_only.components[i][0], i))
        self.assertEqual(text_only.ids(), by_text)
        self.assertEqual(text_only.top(), "engine")

        video_only = retrieve_sfx(self.scene, self.clip, self.index, k=4, lam=1.0)
        by_video = sorted(video_only.components, key=lambda i: (-video_only.components[i][1], i))
        self.assertEqual(video_only.ids(), by_video)

    def test_errors(self):
        with self.assertRaises(ValueError):
            retrieve_sfx(self.scene, self.clip, self.index, lam=1.5)
        music_only = build_index(make_assets(self.path("music"), (MUSIC,)), dim=32)
        with self.assertRaises(CatalogError):
            retrieve_sfx(self.scene, self.clip, music_only)


class TestSelectMusic(TestScenecraft):
    def test_tagged(self):
        index = build_index(make_assets(self.path("assets")), dim=32)
        self.assertEqual(select_music("triumphant", index, 0).asset_id, "anthem")
        self.assertEqual(select_music(ToneLabel("tense", 0.8), index, 0).asset_id, "chase")
        self.assertEqual(select_music("ominous", index, 5).kind, MUSIC)

    def test_seeded_draw(self):
        index = AudioIndex(8)
        for asset_id in ("t1", "t2", "t3"):
            index.add(AudioAsset(asset_id, asset_id + ".wav", "brass", MUSIC, 2.0, "epic"))
        picks = {select_music("epic", index, seed).asset_id for seed in range(20)}
        self.assertTrue(picks <= {"t1", "t2", "t3"})
        self.assertGreater(len(picks), 1)
        self.assertEqual(
            select_music("epic", index, 7).asset_id, select_music("epic", index, 7).asset_id
        )

    def test_caption_fallback(self):
        """Without a tagged track the tone word is searched in the captions."""
        index = AudioIndex(64)
        index.add(AudioAsset("m1", "m1.wav", "serene", MUSIC, 2.0, "joyful"))
        index.add(AudioAsset("m2", "m2.wav", "dark ambient drone", MUSIC, 2.0, "ominous"))
        self.assertEqual(select_music("serene", index, 0).asset_id, "m1")

    def test_errors(self):
        index = build_index(make_assets(self.path("assets"), (SFX,)), dim=32)
        with self.assertRaises(CatalogError):
            select_music("epic", index, 0)
        with self.assertRaises(ValueError):
            select_music("happy", index, 0)


class TestCatalog(TestScenecraft):
    def test_roundtrip(self):
        path = make_catalog(self.path("assets"))
        assets = load_catalog(path)
        self.assertEqual(len(assets), 7)
        self.assertEqual(assets[0].asset_id, "engine")
        self.assertTrue(os.path.isabs(assets[0].path))
        self.assertEqual(assets[0].duration_seconds, 0.5)
        self.assertEqual(assets[4].tone, "triumphant")

    def test_wav_duration(self):
        """Missing durations come from the wave header."""
        os.makedirs(self.path("assets"))
        write_wav(self.path("assets", "boom.wav"), 0.75)
        self.assertEqual(wav_duration(self.path("assets", "boom.wav")), 0.75)
        with open(self.path("assets", "catalog.json"), "w") as fh:
            entry = {"asset_id": "boom", "path": "boom.wav", "caption": "a boom", "kind": "SFX"}
            json.dump({"assets": [entry]}, fh)
        assets = load_catalog(self.path("assets", "catalog.json"))
        self.assertEqual(assets[0].duration_seconds, 0.75)

    def test_errors(self):
        os.makedirs(self.path("assets"))
        write_wav(self.path("assets", "boom.wav"))
        path = self.path("assets", "catalog.json")
        entry = {"asset_id": "boom", "path": "boom.wav", "caption": "a boom", "kind": "SFX"}

        for items in (
            [entry, entry],
            [dict(entry, path="missing.wav")],
            [dict(entry, kind="MUSIC")],
            [dict(entry, kind="NOISE")],
            [{"asset_id": "boom"}],
            [dict(entry, asset_id="../boom")],
        ):
            with open(path, "w") as fh:
                json.dump({"assets": items}, fh)
            with self.assertRaises(CatalogError):
                load_catalog(path)

        with open(path, "w") as fh:
            fh.write("{not json")
        with self.assertRaises(CatalogError):
            load_catalog(path)
        with self.assertRaises(CatalogError):
            load_catalog(self.path("missing.json"))
