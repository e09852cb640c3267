# -*- coding: utf-8 -*-
"""Tests of noise schedule, stage guard and sampler."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

from unittest import mock

import torch

from scenecraft._internal import (
    ADAPTER,
    BASE,
    BASE_PRETRAIN,
    MOVIE_FINETUNE,
    SPATIAL_FINETUNE,
    TEMPORAL,
    TEMPORAL_TRAIN,
)
from scenecraft.diffusion import (
    SampleConfig,
    add_noise,
    check_stage,
    make_schedule,
    sample,
    sampling_timesteps,
    stage_uses_temporal,
    trainable_set,
    training_loss,
)
from scenecraft.errors import DivergenceError, SamplingError, StageOrderError
from scenecraft.textenc import StubTextEncoder
from scenecraft.video_model import group_of, insert_spatial_adapters
from .. import SMALL_MODEL, TestScenecraft


class TestSchedule(TestScenecraft):
    def test_linear(self):
        sched = make_schedule(100, 1e-3, 0.2)
        self.assertEqual(sched.T, 100)
        self.assertEqual(len(sched.alpha_bars), 101)
        self.assertEqual(float(sched.alpha_bars[0]), 1.0)
        self.assertAlmostEqual(float(sched.alpha_bars[1]), 1.0 - 1e-3)
        self.assertAlmostEqual(float(sched.betas[-1]), 0.2)
        self.assertEqual(sched.alpha_bars.dtype, torch.float64)
        self.assertTrue((sched.alpha_bars[1:] < sched.alpha_bars[:-1]).all())
        self.assertLess(float(sched.alpha_bars[-1]), 1e-3)

    def test_default(self):
        sched = make_schedule()
        self.assertEqual(sched.T, 1000)
        self.assertAlmostEqual(float(sched.betas[0]), 1e-4)
        self.assertAlmostEqual(float(sched.betas[-1]), 0.02)
        self.assertLess(float(sched.alpha_bars[-1]), 1e-4)

    def test_errors(self):
        with self.assertRaises(ValueError):
            make_schedule(0)
        with self.assertRaises(ValueError):
            make_schedule(10, 0.0, 0.1)
        with self.assertRaises(ValueError):
            make_schedule(10, 0.2, 0.1)
        with self.assertRaises(ValueError):
            make_schedule(10, 0.1, 1.0)
        with self.assertRaises(TypeError):
            make_schedule(10.0)

    def test_sampling_timesteps(self):
        sched = make_schedule(50)
        self.assertEqual(sampling_timesteps(5, sched), [50, 38, 26, 13, 1])
        self.assertEqual(sampling_timesteps(1, sched), [50])
        self.assertEqual(sampling_timesteps(50, sched), list(range(50, 0, -1)))
        with self.assertRaises(ValueError):
            sampling_timesteps(0, sched)
        with self.assertRaises(ValueError):
            sampling_timesteps(51, sched)


class TestAddNoise(TestScenecraft):
    def test_forward_process(self):
        sched = make_schedule(100, 1e-3, 0.2)
        x0 = torch.rand(2, 4, 3, 8, 16) * 2 - 1
        eps = torch.randn(x0.shape)

        self.assertTrue(torch.equal(add_noise(x0, 0, eps, sched), x0))

        x_t = add_noise(x0, torch.tensor([10, 100]), eps, sched)
        for i, t in enumerate((10, 100)):
            ab = float(sched.alpha_bars[t])
            expected = ab ** 0.5 * x0[i] + (1.0 - ab) ** 0.5 * eps[i]
            self.assertTrue(torch.allclose(x_t[i], expected, atol=1e-6))

        x_t = add_noise(torch.zeros_like(x0), 100, eps, sched)
        self.assertTrue(
            torch.allclose(x_t, (1.0 - float(sched.alpha_bars[100])) ** 0.5 * eps, atol=1e-6)
        )

    def test_errors(self):
        sched = make_schedule(10)
        x0 = torch.zeros(2, 3)
        with self.assertRaises(ValueError):
            add_noise(x0, 1, torch.zeros(2, 4), sched)
        with self.assertRaises(TypeError):
            add_noise(x0, 1.5, x0, sched)
        with self.assertRaises(ValueError):
            add_noise(x0, 11, x0, sched)
        with self.assertRaises(ValueError):
            add_noise(x0, -1, x0, sched)
        with self.assertRaises(ValueError):
            add_noise(x0, torch.tensor([1, 2, 3]), x0, sched)


class TestStages(TestScenecraft):
    def test_trainable_set(self):
        """Each stage trains exactly one parameter group."""
        model = self.full_model()
        for stage, group in (
            (BASE_PRETRAIN, BASE),
            (SPATIAL_FINETUNE, ADAPTER),
            (TEMPORAL_TRAIN, TEMPORAL),
            (MOVIE_FINETUNE, ADAPTER),
        ):
            names = trainable_set(model, stage)
            self.assertTrue(names)
            for name in names:
                self.assertEqual(group_of(name), group, name)
        with self.assertRaises(ValueError):
            trainable_set(model, 7)

        self.assertFalse(stage_uses_temporal(BASE_PRETRAIN))
        self.assertFalse(stage_uses_temporal(SPATIAL_FINETUNE))
        self.assertTrue(stage_uses_temporal(TEMPORAL_TRAIN))
        self.assertTrue(stage_uses_temporal(MOVIE_FINETUNE))

    def test_check_stage(self):
        config = self.model_config()
        model = self.base_model()
        check_stage(model, BASE_PRETRAIN)
        with self.assertRaises(StageOrderError):
            check_stage(model, SPATIAL_FINETUNE)
        with self.assertRaises(StageOrderError):
            check_stage(model, TEMPORAL_TRAIN)

        insert_spatial_adapters(model, config)
        check_stage(model, SPATIAL_FINETUNE)
        with self.assertRaises(StageOrderError):
            check_stage(model, BASE_PRETRAIN)
        with self.assertRaisesRegex(StageOrderError, r"TEMPORAL_TRAIN needs temporal layers"):
            check_stage(model, TEMPORAL_TRAIN)

        model = self.full_model()
        with self.assertRaises(StageOrderError):
            check_stage(model, MOVIE_FINETUNE)
        model.stage_history = ["BASE_PRETRAIN", "SPATIAL_FINETUNE", "TEMPORAL_TRAIN"]
        check_stage(model, MOVIE_FINETUNE)
        check_stage(model, TEMPORAL_TRAIN)
        with self.assertRaisesRegex(StageOrderError, r"can not run after TEMPORAL_TRAIN"):
            check_stage(model, SPATIAL_FINETUNE)
        with self.assertRaises(ValueError):
            check_stage(model, 9)


class TestTrainingLoss(TestScenecraft):
    def test_loss(self):
        model = self.base_model()
        sched = make_schedule(50)
        x0 = torch.rand(2, 1, 3, 8, 16) * 2 - 1
        cond = StubTextEncoder(dim=SMALL_MODEL["text_embed_dim"]).encode_batch(["a", "b"])
        gen = torch.Generator().manual_seed(3)
        loss = training_loss(model, x0, cond, 0, sched, gen, temporal_enabled=False)
        self.assertEqual(loss.dim(), 0)
        self.assertTrue(torch.isfinite(loss))

        # Same generator state, same loss
        gen = torch.Generator().manual_seed(3)
        again = training_loss(model, x0, cond, 0, sched, gen, temporal_enabled=False)
        self.assertEqual(float(again), float(loss))

    def test_errors(self):
        sched = make_schedule(50)
        x0 = torch.zeros(1, 1, 3, 8, 16)
        with self.assertRaises(ValueError):
            training_loss(None, x0 * float("nan"), None, 0, sched)

        def diverged(x, t, cond, domain_id, temporal_enabled=True):
            return torch.full_like(x, float("inf"))

        with self.assertRaises(DivergenceError):
            training_loss(diverged, x0, None, 0, sched)

    @staticmethod
    def replay(seed, x0, T):
        """Timesteps and noise training_loss draws from a generator of this seed."""
        gen = torch.Generator().manual_seed(seed)
        t = torch.randint(1, T + 1, (x0.shape[0],), generator=gen)
        return t, torch.randn(x0.shape, generator=gen, dtype=x0.dtype)

    def test_exact_noise(self):
        """A model which returns the drawn noise has loss 0."""
        sched = make_schedule(50)
        x0 = torch.rand(3, 2, 3, 8, 16, dtype=torch.float64) * 2 - 1
        t_expected, eps = self.replay(4, x0, sched.T)
        seen = {}

        def oracle(x, t, cond, domain_id, temporal_enabled=True):
            seen.update(x=x, t=t, domain_id=domain_id, temporal_enabled=temporal_enabled)
            return eps.clone()

        gen = torch.Generator().manual_seed(4)
        loss = training_loss(oracle, x0, None, 1, sched, gen, temporal_enabled=False)
        self.assertEqual(float(loss), 0.0)
        self.assertTrue(torch.equal(seen["t"], t_expected))
        self.assertTrue(torch.equal(seen["x"], add_noise(x0, t_expected, eps, sched)))
        self.assertEqual((seen["domain_id"], seen["temporal_enabled"]), (1, False))

    def test_zero_prediction(self):
        """Predicting zeros costs the mean square of unit gaussian noise."""
        sched = make_schedule(50)
        x0 = torch.rand(8, 4, 3, 16, 32, dtype=torch.float64) * 2 - 1
        _, eps = self.replay(9, x0, sched.T)

        def zeros(x, t, cond, domain_id, temporal_enabled=True):
            return torch.zeros_like(x)

        loss = float(training_loss(zeros, x0, None, 0, sched, torch.Generator().manual_seed(9)))
        self.assertAlmostEqual(loss, float((eps**2).mean()), places=12)
        self.assertLess(abs(loss - 1.0), 0.05)

    def test_gradient(self):
        """Gradient of a two parameter model matches central differences."""
        sched = make_schedule(50)
        x0 = torch.rand(4, 2, 3, 8, 16, dtype=torch.float64) * 2 - 1

        def loss_at(w, c):
            def affine(x, t, cond, domain_id, temporal_enabled=True):
                return w * x + c

            gen = torch.Generator().manual_seed(2)
            return training_loss(affine, x0, None, 0, sched, gen)

        w = torch.tensor(0.3, dtype=torch.float64, requires_grad=True)
        c = torch.tensor(-0.2, dtype=torch.float64, requires_grad=True)
        loss_at(w, c).backward()

        h = 1e-6
        with torch.no_grad():
            dw = (loss_at(w + h, c) - loss_at(w - h, c)) / (2 * h)
            dc = (loss_at(w, c + h) - loss_at(w, c - h)) / (2 * h)
        for analytic, numeric in ((w.grad, dw), (c.grad, dc)):
            self.assertLessEqual(
                abs(float(analytic) - float(numeric)), 1e-3 * abs(float(numeric)) + 1e-9
            )

        # Closed form 2 * mean((w x_t + c - eps) x_t) and 2 * mean(w x_t + c - eps)
        t, eps = self.replay(2, x0, sched.T)
        x_t = add_noise(x0, t, eps, sched)
        residual = 0.3 * x_t - 0.2 - eps
        self.assertAlmostEqual(float(w.grad), float(2.0 * (residual * x_t).mean()), places=10)
        self.assertAlmostEqual(float(c.grad), float(2.0 * residual.mean()), places=10)


class TestSample(TestScenecraft):
    def setUp(self):
        super().setUp()
        self.sched = make_schedule(50)
        self.encoder = StubTextEncoder(dim=SMALL_MODEL["text_embed_dim"])
        self.cond = self.encoder.encode("a red square moving left")

    def test_needs_temporal(self):
        with self.assertRaises(SamplingError):
            sample(self.base_model(), self.cond, SampleConfig(steps=2), self.sched)

    def test_determinism(self):
        """Equal seeds give equal videos."""
        model = self.full_model()
        a = sample(model, self.cond, SampleConfig(steps=4, seed=5), self.sched)
        b = sample(model, self.cond, SampleConfig(steps=4, seed=5), self.sched)
        c = sample(model, self.cond, SampleConfig(steps=4, seed=6), self.sched)
        self.assertEqual(a.shape, (1, 4, 3, 8, 16))
        self.assertTrue(torch.equal(a, b))
        self.assertFalse(torch.equal(a, c))
        self.assertLessEqual(float(a.abs().max()), 1.0)

    def test_batch(self):
        model = self.full_model()
        cond = self.encoder.encode_batch(["a car", "a plane"])
        videos = sample(model, cond, SampleConfig(steps=2), self.sched)
        self.assertEqual(videos.shape[0], 2)

    def test_guidance_zero(self):
        """Without guidance the conditional branch is skipped."""
        model = self.full_model()
        other = self.encoder.encode("a blue square moving up")
        with mock.patch.object(model, "forward", wraps=model.forward) as forward:
            a = sample(model, self.cond, SampleConfig(steps=3, guidance_scale=0.0), self.sched)
        self.assertEqual(forward.call_count, 3)
        b = sample(model, other, SampleConfig(steps=3, guidance_scale=0.0), self.sched)
        self.assertTrue(torch.equal(a, b))

        with mock.patch.object(model, "forward", wraps=model.forward) as forward:
            sample(model, self.cond, SampleConfig(steps=3, guidance_scale=2.0), self.sched)
        self.assertEqual(forward.call_count, 6)

    def test_config_errors(self):
        with self.assertRaises(ValueError):
            SampleConfig(steps=0)
        with self.assertRaises(ValueError):
            SampleConfig(guidance_scale=-1.0)
        with self.assertRaises(TypeError):
            SampleConfig(seed="1")
        with self.assertRaises(ValueError):
            sample(self.full_model(), self.cond, SampleConfig(steps=51), self.sched)
