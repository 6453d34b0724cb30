import os
import tempfile
import unittest
from pathlib import Path

import numpy as np

from scatterShape.cli import PipelineConfig, load_config, main
from scatterShape.core.geometry import BinaryImage, threshold
from scatterShape.core.models import invert
from scatterShape.core.scatter import relative_l2, simulate_sample
from scatterShape.errors import ConfigError
from scatterShape.io import (
    RecordKind, load_checkpoint, load_manifest, read_json, read_shard, read_table_csv, shard_info, write_shard,
)

SLOW = bool(os.environ.get("SCATTERSHAPE_SLOW"))


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def write_config(self, text):
        path = self.dir / "pipeline.toml"
        path.write_text(text)
        return str(path)

    def run_cli(self, *args):
        return main(list(args) + ["--out", str(self.dir), "--quiet"])


class TestConfig(CliTestCase):
    def test_defaults(self):
        cfg = load_config()
        self.assertEqual(cfg.count, 2000)
        self.assertEqual(cfg.frequency_list, [1000.0, 1500.0, 2000.0, 2500.0, 3000.0])
        self.assertEqual(cfg.train_configs["fnn"].epochs, 300)
        self.assertEqual(cfg.artifact("shapes").name, "shapes.shard")

    def test_bundled_config_matches_defaults(self):
        bundled = Path(__file__).resolve().parents[1] / "configs" / "desk.toml"
        cfg = load_config(bundled)
        self.assertEqual(cfg.snapshot(), load_config().snapshot())

    def test_tables_override(self):
        cfg = load_config(self.write_config(
            "[dataset]\ncount = 12\n[training.inn]\nkl_weight = 0.01\n[seeds]\nbase = 9\n"
        ))
        self.assertEqual(cfg.count, 12)
        self.assertEqual(cfg.train_configs["inn"].kl_weight, 0.01)
        self.assertEqual(cfg.base_seed, 9)

    def test_stage_seeds(self):
        cfg = PipelineConfig()
        self.assertNotEqual(cfg.seed("aae"), cfg.seed("fnn"))
        self.assertEqual(cfg.seed("aae"), PipelineConfig().seed("aae"))
        self.assertNotEqual(cfg.apply_overrides(seed=2).seed("aae"), PipelineConfig().seed("aae"))

    def test_invalid_documents(self):
        with self.assertRaises(ConfigError):
            load_config(self.dir / "missing.toml")
        with self.assertRaises(ConfigError):
            load_config(self.write_config("[dataset\ncount = 1"))
        with self.assertRaises(ConfigError):
            load_config(self.write_config("[telemetry]\nenabled = true\n"))
        with self.assertRaises(ConfigError):
            load_config(self.write_config('[materials]\nbackground = "mercury"\n'))
        with self.assertRaises(ConfigError):
            load_config(self.write_config("[training.gan]\nepochs = 1\n"))


class TestCommands(CliTestCase):
    def test_no_command(self):
        self.assertEqual(main([]), 1)

    def test_missing_output_directory(self):
        self.assertEqual(main(["gen", "--out", str(self.dir / "absent"), "--quiet"]), 2)

    def test_bad_config_exit_code(self):
        self.assertEqual(self.run_cli("gen", "--config", str(self.dir / "missing.toml")), 2)

    def test_gen(self):
        config = self.write_config("[dataset]\ncount = 10\n")
        self.assertEqual(self.run_cli("gen", "--config", config), 0)
        self.assertEqual(shard_info(self.dir / "shapes.shard")[1:], (10, 4096))
        manifest = load_manifest(self.dir / "manifest.json")
        self.assertEqual([len(manifest.indices(s)) for s in ("train", "val", "test")], [8, 1, 1])

    def test_gen_is_deterministic(self):
        config = self.write_config("[dataset]\ncount = 4\n")
        self.run_cli("gen", "--config", config)
        first = read_shard(self.dir / "shapes.shard")
        self.run_cli("gen", "--config", config)
        np.testing.assert_array_equal(read_shard(self.dir / "shapes.shard"), first)

    def test_gen_empty(self):
        config = self.write_config("[dataset]\ncount = 0\n")
        self.assertEqual(self.run_cli("gen", "--config", config), 0)
        self.assertEqual(read_shard(self.dir / "shapes.shard").shape, (0, 4096))

    def test_train_needs_earlier_stages(self):
        self.assertEqual(self.run_cli("train", "aae"), 3)
        config = self.write_config("[dataset]\ncount = 5\n")
        self.run_cli("gen", "--config", config)
        self.assertEqual(self.run_cli("train", "inn", "--config", config), 3)

    def test_invert_needs_models(self):
        farfield = self.dir / "farfield.csv"
        farfield.write_text("\n".join(["1.0"] * 435))
        self.assertEqual(self.run_cli("invert", str(farfield)), 3)

    def test_mie(self):
        self.assertEqual(self.run_cli("mie", "--material", "aluminum", "--radius", "0.4"), 0)
        rows = read_table_csv(self.dir / "mie_farfield_aluminum.csv")
        self.assertEqual(len(rows), 5 * 87)
        self.assertTrue(all(float(row["amplitude"]) >= 0 for row in rows))
        sweep = read_table_csv(self.dir / "mie_scs_aluminum.csv")
        self.assertEqual(len(sweep), 200)
        self.assertAlmostEqual(float(sweep[0]["ka"]), 0.1)


class TestStudies(CliTestCase):
    def test_ablation_and_halfplane_tables(self):
        config = self.write_config(
            "[dataset]\ncount = 20\n"
            "[training.aae]\nepochs = 1\nbatch_size = 8\n"
            "[training.fnn]\nepochs = 1\nbatch_size = 8\n"
            "[training.inn]\nepochs = 1\nbatch_size = 8\n"
        )
        self.assertEqual(self.run_cli("gen", "--config", config), 0)
        farfields = np.random.default_rng(0).uniform(0.01, 1.0, size=(20, 435))
        write_shard(farfields, RecordKind.FARFIELDS, self.dir / "farfields.shard", width=435)
        for stage in ("aae", "fnn", "inn"):
            self.assertEqual(self.run_cli("train", stage, "--config", config), 0)

        self.assertEqual(self.run_cli("ablate-freq", "--config", config, "--jobs", "1"), 0)
        rows = read_table_csv(self.dir / "ablate_frequencies.csv")
        self.assertEqual([int(row["k"]) for row in rows], [1, 2, 3, 4, 5])
        for row in rows:
            for column in ("bce", "ssim", "farfield_error"):
                self.assertTrue(np.isfinite(float(row[column])), row)
        self.assertTrue((self.dir / "inn_k3.ckpt").exists())

        self.assertEqual(self.run_cli("halfplane", "--config", config), 0)
        rows = read_table_csv(self.dir / "halfplane.csv")
        self.assertEqual([row["variant"] for row in rows], ["full", "masked"])
        self.assertEqual([int(row["width"]) for row in rows], [435, 220])
        self.assertTrue((self.dir / "inn_halfplane.ckpt").exists())


@unittest.skipUnless(SLOW, "set SCATTERSHAPE_SLOW=1 for the desk-scale acceptance run")
class TestDeskAcceptance(unittest.TestCase):
    """Default configuration end to end: 2000 shapes, full training schedules"""

    @classmethod
    def setUpClass(cls):
        cls._tmp = tempfile.TemporaryDirectory()
        cls.dir = Path(cls._tmp.name)
        stages = [["gen"], ["simulate"], ["train", "aae"], ["train", "fnn"], ["train", "inn"], ["eval"],
                  ["ablate-freq"], ["halfplane"]]
        common = ["--out", str(cls.dir), "--jobs", str(os.cpu_count() or 1), "--quiet"]
        cls.codes = [(" ".join(stage), main(stage + common)) for stage in stages]

    @classmethod
    def tearDownClass(cls):
        cls._tmp.cleanup()

    def test_stages_succeed(self):
        self.assertEqual([code for _, code in self.codes], [0] * len(self.codes), self.codes)

    def test_test_split_quality(self):
        summary = read_json(self.dir / "eval_summary.json")
        self.assertGreaterEqual(summary["aae"]["ssim"]["mean"], 0.85)
        self.assertLessEqual(summary["aae"]["bce"]["mean"], 0.08)
        self.assertLessEqual(summary["fnn"]["relative_error"]["mean"], 0.10)
        self.assertLessEqual(summary["inn"]["farfield_error"]["mean"], 0.10)
        self.assertGreaterEqual(summary["inn"]["ssim"]["mean"], 0.70)
        self.assertLessEqual(summary["inn"]["bce"]["mean"], 0.15)

    def test_more_frequencies_invert_better(self):
        rows = {int(row["k"]): row for row in read_table_csv(self.dir / "ablate_frequencies.csv")}
        bce = [float(rows[k]["bce"]) for k in (1, 3, 5)]
        ssim = [float(rows[k]["ssim"]) for k in (1, 3, 5)]
        self.assertGreater(bce[0], bce[1])
        self.assertGreater(bce[1], bce[2])
        self.assertLess(ssim[0], ssim[1])
        self.assertLess(ssim[1], ssim[2])

    def test_halfplane_close_to_full_range(self):
        rows = {row["variant"]: float(row["ssim"]) for row in read_table_csv(self.dir / "halfplane.csv")}
        self.assertLessEqual(abs(rows["masked"] - rows["full"]), 0.1)
        self.assertLessEqual(rows["masked"], rows["full"] + 0.02)

    def test_inverted_shapes_reproduce_far_fields(self):
        manifest = load_manifest(self.dir / "manifest.json")
        farfields = read_shard(self.dir / "farfields.shard").astype(float)
        test = manifest.indices("test")
        test = test[np.isfinite(farfields[test]).all(axis=1)][:10]
        inn = load_checkpoint(self.dir / "inn.ckpt", "inn")
        aae = load_checkpoint(self.dir / "aae.ckpt", "aae")
        _, images = invert(inn, aae, farfields[test])
        errors = [
            relative_l2(simulate_sample(BinaryImage.from_vector(image)).vector(), target)
            for image, target in zip(threshold(images), farfields[test])
        ]
        self.assertLessEqual(np.mean(errors), 0.15)


@unittest.skipUnless(SLOW, "set SCATTERSHAPE_SLOW=1 for the end-to-end pipeline")
class TestPipeline(CliTestCase):
    def test_end_to_end(self):
        config = self.write_config(
            "[dataset]\ncount = 20\n"
            "[solver]\ntol = 1e-5\n"
            "[training.aae]\nepochs = 2\nbatch_size = 8\n"
            "[training.fnn]\nepochs = 2\nbatch_size = 8\n"
            "[training.inn]\nepochs = 2\nbatch_size = 8\n"
        )
        self.assertEqual(self.run_cli("gen", "--config", config), 0)
        self.assertEqual(self.run_cli("simulate", "--config", config), 0)
        F = read_shard(self.dir / "farfields.shard")
        self.assertEqual(F.shape, (20, 435))
        for stage in ("aae", "fnn", "inn"):
            self.assertEqual(self.run_cli("train", stage, "--config", config), 0)
        self.assertEqual(self.run_cli("eval", "--config", config), 0)
        self.assertTrue((self.dir / "eval_summary.json").exists())

        farfield = self.dir / "sample.csv"
        farfield.write_text("\n".join(str(v) for v in F[0]))
        self.assertEqual(self.run_cli("invert", str(farfield), "--samples", "3", "--config", config), 0)
        image = np.loadtxt(self.dir / "invert_image.csv", delimiter=",")
        self.assertEqual(image.shape, (64, 64))


if __name__ == '__main__':
    unittest.main()
