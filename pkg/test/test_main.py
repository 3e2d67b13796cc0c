# -*- coding: utf-8 -*-
__copyright__ = "Copyright (c) 2026 splat-camo contributors"

import argparse
import contextlib
import io
import json
import os
import sys
import tempfile
import unittest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import main
from splatcamo.errors import ConfigError
from splatcamo.scene import load_dataset

SAMPLE_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'sample'))

TINY_CONFIG = {
    "name": "tiny",
    "seed": 3,
    "scene": {
        "ground_extent": 3.0,
        "ground_density": 2.0,
        "target": {"center": [0.0, 0.5, 0.0], "size": [1.6, 1.0, 0.8], "density": 10.0}
    },
    "capture": {"view_count": 6, "radius": 6.0, "look_at": [0.0, 0.5, 0.0], "width": 16, "height": 16},
    "attack": [{"appearance": "road", "elevation_deg": 90.0, "delta_deg": 40.0}],
    "sh_order": 1,
    "train": {"iterations": 4, "checkpoint_every": 2},
    "eval": {
        "test_views": {"layout": "overhead", "view_count": 4, "radius": 7.0, "look_at": [0.0, 0.5, 0.0],
                       "width": 16, "height": 16, "seed": 1}
    },
    "ablation": {"sh_orders": [0, 1], "altitudes": [4.0, 8.0], "ring_radius": 6.0, "ring_views": 3, "iterations": 2}
}


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main.main(argv)
    return code, out.getvalue(), err.getvalue()


class ConfigTest(unittest.TestCase):
    def setUp(self) -> None:
        self.__dir = tempfile.mkdtemp()

    def write(self, document, name="config.json"):
        path = os.path.join(self.__dir, name)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(document if isinstance(document, str) else json.dumps(document))
        return path

    def test_samples_load(self):
        for name in ("overhead-road", "overhead-grass", "overhead-road-grass", "stopsign-clock", "stopsign-soccer"):
            cfg, digest = main.load_config(os.path.join(SAMPLE_DIR, name + ".json"))
            self.assertEqual(cfg.name, name)
            self.assertEqual(len(digest), 64)
            self.assertIsNotNone(cfg.plan())

    def test_sample_capture_sizes(self):
        road, _ = main.load_config(os.path.join(SAMPLE_DIR, "overhead-road.json"))
        self.assertEqual(road.capture.view_count, 200)
        self.assertEqual(road.eval.test_views.view_count, 160)
        sign, _ = main.load_config(os.path.join(SAMPLE_DIR, "stopsign-clock.json"))
        self.assertEqual(sign.capture.view_count, 144)
        self.assertEqual(sign.target_class, "stop-sign")

    def test_seed_propagates(self):
        cfg, _ = main.load_config(self.write(TINY_CONFIG), seed=9)
        self.assertEqual((cfg.scene.seed, cfg.capture.seed, cfg.train.seed), (9, 9, 9))
        self.assertEqual(cfg.train.background, cfg.background)

    def test_syntax_error_position(self):
        with self.assertRaises(ConfigError) as ctx:
            main.load_config(self.write('{\n  "name": "x",\n  oops\n}'))
        self.assertEqual(ctx.exception.context["line"], 3)

    def test_duplicate_appearances(self):
        document = dict(TINY_CONFIG, attack=[{"appearance": "road"}, {"appearance": "road"}])
        with self.assertRaises(ConfigError):
            main.load_config(self.write(document))

    def test_unknown_appearance(self):
        with self.assertRaises(ConfigError):
            main.load_config(self.write(dict(TINY_CONFIG, attack=[{"appearance": "plaid"}])))

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            main.load_config(os.path.join(self.__dir, "absent.json"))

    def test_region_reference_pose(self):
        cfg, _ = main.load_config(self.write(TINY_CONFIG))
        region = cfg.plan().regions[0]
        self.assertAlmostEqual(region.reference.forward[1], -1.0)
        self.assertEqual(region.delta_deg, 40.0)


class CommandTest(unittest.TestCase):
    def setUp(self) -> None:
        self.__dir = tempfile.mkdtemp()
        self.__config = os.path.join(self.__dir, "tiny.json")
        with open(self.__config, 'w', encoding='utf-8') as f:
            json.dump(TINY_CONFIG, f)

    def out(self, name):
        return os.path.join(self.__dir, name)

    def test_capture_is_deterministic(self):
        code, stdout, _ = run(["capture", "--config", self.__config, "--out", self.out("a")])
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(stdout)["views"], 6)
        run(["capture", "--config", self.__config, "--out", self.out("b")])
        for name in sorted(os.listdir(self.out("a"))):
            with open(os.path.join(self.out("a"), name), 'rb') as fa, open(os.path.join(self.out("b"), name), 'rb') as fb:
                self.assertEqual(fa.read(), fb.read(), name)
        with open(os.path.join(self.out("a"), "provenance.json"), 'r', encoding='utf-8') as f:
            provenance = json.load(f)
        self.assertEqual((provenance["command"], provenance["seed"]), ("capture", 3))

    def test_poison_train_render_eval(self):
        run(["capture", "--config", self.__config, "--out", self.out("capture")])
        plan = os.path.join(self.__dir, "plan.json")
        main.save_plan(main.load_config(self.__config)[0].plan(), plan)

        code, stdout, _ = run(["poison", "--config", self.__config, "--dataset", self.out("capture"),
                               "--plan", plan, "--out", self.out("poisoned")])
        self.assertEqual(code, 0)
        with open(os.path.join(self.out("poisoned"), "replacements.json"), 'r', encoding='utf-8') as f:
            replacements = json.load(f)
        self.assertEqual(replacements["total_views"], 6)
        self.assertEqual(len(replacements["replaced"]), json.loads(stdout)["replaced"])
        with open(os.path.join(self.out("capture"), "cameras.json"), 'rb') as fa, \
                open(os.path.join(self.out("poisoned"), "cameras.json"), 'rb') as fb:
            self.assertEqual(fa.read(), fb.read())

        code, _, _ = run(["train", "--config", self.__config, "--dataset", self.out("poisoned"),
                          "--out", self.out("train"), "--checkpoints"])
        self.assertEqual(code, 0)
        self.assertTrue(os.path.exists(os.path.join(self.out("train"), "cloud.splat")))
        self.assertEqual(sorted(os.listdir(os.path.join(self.out("train"), "checkpoints"))),
                         ["ckpt_000002.splat", "ckpt_000004.splat"])

        cloud = os.path.join(self.out("train"), "cloud.splat")
        code, _, _ = run(["render", "--cloud", cloud, "--dataset", self.out("capture"), "--out", self.out("render")])
        self.assertEqual(code, 0)
        self.assertEqual(load_dataset(self.out("render")).names, load_dataset(self.out("capture")).names)

        code, _, _ = run(["eval", "--config", self.__config, "--cloud", cloud, "--out", self.out("eval")])
        self.assertEqual(code, 0)
        with open(os.path.join(self.out("eval"), "report.json"), 'r', encoding='utf-8') as f:
            self.assertEqual(json.load(f)["rows"][0]["scenario"], "test")

    def test_empty_plan_copies_dataset(self):
        run(["capture", "--config", self.__config, "--out", self.out("capture")])
        plan = os.path.join(self.__dir, "empty.json")
        with open(plan, 'w', encoding='utf-8') as f:
            f.write('{"regions": []}')
        code, stdout, _ = run(["poison", "--dataset", self.out("capture"), "--plan", plan, "--out", self.out("copy")])
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(stdout)["replaced"], 0)
        for name in load_dataset(self.out("capture")).names:
            with open(os.path.join(self.out("capture"), name), 'rb') as fa, \
                    open(os.path.join(self.out("copy"), name), 'rb') as fb:
                self.assertEqual(fa.read(), fb.read())

    def test_exact_init_writes_checkpoints(self):
        run(["capture", "--config", self.__config, "--out", self.out("capture")])
        code, _, _ = run(["train", "--config", self.__config, "--dataset", self.out("capture"),
                          "--out", self.out("exact"), "--exact-init", "--checkpoints"])
        self.assertEqual(code, 0)
        self.assertEqual(sorted(os.listdir(os.path.join(self.out("exact"), "checkpoints"))),
                         ["ckpt_000002.splat", "ckpt_000004.splat"])

    def test_ablate_sh_rows(self):
        code, stdout, _ = run(["ablate-sh", "--config", self.__config, "--out", self.out("ablate")])
        self.assertEqual(code, 0)
        rows = json.loads(stdout)["rows"]
        self.assertEqual([r["extra"]["sh_order"] for r in rows], [0, 1])
        self.assertTrue(os.path.exists(os.path.join(self.out("ablate"), "poisoned_l0.splat")))

    def test_ablate_altitude_rows(self):
        code, stdout, _ = run(["ablate-altitude", "--config", self.__config, "--out", self.out("alt")])
        self.assertEqual(code, 0)
        rows = json.loads(stdout)["rows"]
        self.assertEqual([r["extra"]["altitude"] for r in rows], [4.0, 8.0])
        for row in rows:
            self.assertAlmostEqual(row["delta_ap"], row["ap_adversarial"] - row["ap_benign"], delta=0.0011)

    def test_config_error_exit_code(self):
        bad = os.path.join(self.__dir, "bad.json")
        with open(bad, 'w', encoding='utf-8') as f:
            f.write('{"capture": {"view_count": 0}}')
        code, _, stderr = run(["capture", "--config", bad, "--out", self.out("x")])
        self.assertEqual(code, 2)
        self.assertEqual(json.loads(stderr)["error"], "config")

    def test_io_error_exit_code(self):
        plan = os.path.join(self.__dir, "empty.json")
        with open(plan, 'w', encoding='utf-8') as f:
            f.write('{"regions": []}')
        code, _, stderr = run(["poison", "--dataset", self.out("missing"), "--plan", plan, "--out", self.out("x")])
        self.assertEqual(code, 1)
        self.assertEqual(json.loads(stderr)["error"], "io")

    def test_demo(self):
        summary = main.cmd_demo(argparse.Namespace(out=self.out("demo")))
        side, top = summary["side"]["splat_rgb"], summary["top"]["splat_rgb"]
        self.assertGreater(side[1], side[0] + 0.3)
        self.assertGreater(top[0], side[0] + 0.2)
        self.assertTrue(os.path.exists(os.path.join(self.out("demo"), "demo_side.png")))


if __name__ == '__main__':
    unittest.main()
