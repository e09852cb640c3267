# -*- coding: utf-8 -*-
"""Tests of the scenecraft command."""
__author__ = "Scenecraft contributors"
__copyright__ = "Copyright (C) 2026 Scenecraft contributors"
__license__ = "LGPLv2"

import io
import os
from contextlib import redirect_stderr, redirect_stdout

from scenecraft.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, build_parser, main
from scenecraft.config import load_config
from scenecraft.pipeline import SCRIPTS_FILE, read_run_records
from scenecraft.video_model import save_checkpoint
from .. import TestScenecraft
from ..helper import RACE_BRIEF, make_catalog


class TestCli(TestScenecraft):
    def run_main(self, *argv) -> tuple:
        """Exit code, stdout and stderr of main."""
        out = io.StringIO()
        err = io.StringIO()
        with redirect_stdout(out), redirect_stderr(err):
            code = main(list(argv))
        return code, out.getvalue(), err.getvalue()

    def test_parser(self):
        args = build_parser().parse_args(
            ["train", "--stage", "spatial-finetune", "--dataset", "d", "--seed", "3"]
        )
        self.assertEqual(args.command, "train")
        self.assertEqual(args.stage, "spatial-finetune")
        self.assertEqual(args.seed, 3)
        self.assertIsNone(args.config)

        args = build_parser().parse_args(["--seed", "4", "expand", "--text", "x"])
        self.assertEqual(args.seed, 4)
        self.assertIsNone(args.out)

        with redirect_stderr(io.StringIO()):
            with self.assertRaises(SystemExit):
                build_parser().parse_args(["train", "--stage", "fly", "--dataset", "d"])
            with self.assertRaises(SystemExit):
                build_parser().parse_args([])

    def test_config_error(self):
        """A bad config exits with 2 before anything is written."""
        path = self.write_config(model={"colour": "red"})
        code, out, err = self.run_main("--config", path, "expand", "--text", RACE_BRIEF)
        self.assertEqual(code, EXIT_CONFIG)
        self.assertEqual(out, "")
        self.assertIn("config error: unknown config key [model] colour", err)
        self.assertFalse(os.path.exists(self.path("out")))

        code, _, err = self.run_main(
            "expand", "--text", RACE_BRIEF, "--config", self.path("no.ini")
        )
        self.assertEqual(code, EXIT_CONFIG)
        self.assertIn("can not access config file", err)
        self.assertFalse(os.path.exists(self.path("out")))

    def test_expand(self):
        path = self.write_config()
        code, out, err = self.run_main(
            "expand", "--text", RACE_BRIEF, "--scenes", "3", "--config", path, "--seed", "5"
        )
        self.assertEqual(code, EXIT_OK, err)
        target = self.path("out", SCRIPTS_FILE)
        self.assertEqual(out, "scripts: {0}\n".format(target))
        self.assertTrue(os.path.isfile(target))

        record = read_run_records(self.path("out"))[0]
        expected = load_config(path).replace("io", "seed", 5)
        self.assertEqual(record["config_hash"], expected.config_hash())

        # --out moves the output
        code, _, _ = self.run_main(
            "--config", path, "--out", self.path("other"), "expand", "--text", RACE_BRIEF
        )
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(os.path.isfile(self.path("other", SCRIPTS_FILE)))

    def test_failures(self):
        path = self.write_config()
        code, out, err = self.run_main(
            "--config", path, "sample", "--scripts", self.path("missing.json"), "--checkpoint", "x"
        )
        self.assertEqual(code, EXIT_FAILED)
        self.assertEqual(out, "")
        self.assertTrue(err.startswith("sample failed: "))
        self.assertEqual(read_run_records(self.path("out"))[-1]["status"], "failed")

        # Missing checkpoint setting is a config problem of the run
        self.run_main("--config", path, "expand", "--text", RACE_BRIEF)
        code, _, err = self.run_main(
            "--config", path, "sample", "--scripts", self.path("out", SCRIPTS_FILE)
        )
        self.assertEqual(code, EXIT_CONFIG)
        self.assertIn("[model] checkpoint is empty", err)

    def test_stage_order(self):
        path = self.write_config(train={"steps": 1, "batch": 1, "prefetch": 0})
        self.assertEqual(
            self.run_main("--config", path, "make-dataset", "--clips", "2", "--stills")[0],
            EXIT_OK,
        )
        dataset = self.path("out", "dataset")
        code, _, _ = self.run_main(
            "--config", path, "train", "--stage", "base-pretrain", "--dataset", dataset
        )
        self.assertEqual(code, EXIT_OK)

        code, _, err = self.run_main(
            "--config",
            path,
            "train",
            "--stage",
            "temporal-train",
            "--dataset",
            dataset,
            "--checkpoint",
            self.path("out", "checkpoints", "base_pretrain.pt"),
        )
        self.assertEqual(code, EXIT_FAILED)
        self.assertIn("run SPATIAL_FINETUNE first", err)

    def test_make_movie(self):
        checkpoint = self.path("model.pt")
        save_checkpoint(self.full_model(seed=2), checkpoint)
        path = self.write_config(audio={"catalog": make_catalog(self.path("assets"))})
        code, out, err = self.run_main(
            "make-movie",
            "--text",
            RACE_BRIEF,
            "--checkpoint",
            checkpoint,
            "--scenes",
            "2",
            "--seconds",
            "0.5",
            "--config",
            path,
        )
        self.assertEqual(code, EXIT_OK, err)
        self.assertEqual(out, "movie: {0}\n".format(self.path("out", "movie")))
        self.assertTrue(os.path.isfile(self.path("out", "movie", "manifest.json")))
