import os
import unittest

import numpy as np

from scatterShape.core.geometry import threshold
from scatterShape.core.metrics import shape_reports
from scatterShape.core.models import (
    AaeModel, FnnModel, InnModel, Standardizer, angular_mask, encode, freeze, frequency_block_select,
    frequency_variant_widths, generate, halfplane_widths, invert, kept_angles, predict, reconstruct,
    reconstruct_binary, sample_diversity, train_aae, train_fnn, train_inn, validation_mae,
)
from scatterShape.core.nn import TrainConfig
from scatterShape.core.scatter import relative_l2
from scatterShape.core.shape_generator import ShapeGenerator
from scatterShape.errors import ConfigError, FrozenModelError, ShapeMismatchError

SLOW = bool(os.environ.get("SCATTERSHAPE_SLOW"))

# 4×4 images, 4-dimensional latent, far fields of two 5-angle blocks
TOY_AAE = {
    "encoder_widths": (16, 12, 4),
    "generator_widths": (4, 12, 16),
    "discriminator_widths": (4, 8, 1),
}
TOY_FNN = (16, 20, 10)
TOY_INN = (10, 16, 8)


def toy_images(count=48, seed=0):
    """Random axis-aligned rectangles on a 4×4 grid"""
    rng = np.random.default_rng(seed)
    images = np.zeros((count, 4, 4))
    for image in images:
        r, c = rng.integers(0, 3, size=2)
        image[r:r + 2, c:c + rng.integers(1, 3)] = 1
    return images.reshape(count, 16)


def toy_farfields(images):
    """Smooth nonnegative map standing in for the solver"""
    mixing = np.random.default_rng(7).uniform(size=(16, 10))
    return np.abs(images @ mixing) + 0.1


def toy_decoders(images, farfields):
    """AAE and FNN trained on the toy set, for the inverse-network tests"""
    aae_cfg = TrainConfig({"epochs": 20, "batch_size": 8, "learning_rate": 5e-3})
    aae, _ = train_aae(images, aae_cfg, **TOY_AAE)
    fnn_cfg = TrainConfig({"epochs": 60, "batch_size": 8, "learning_rate": 5e-3})
    fnn, history = train_fnn(
        images[:40], farfields[:40], fnn_cfg,
        validation=(images[40:], farfields[40:]), blocks=2, widths=TOY_FNN,
    )
    return aae, fnn, history


class TestAae(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.images = toy_images()
        cfg = TrainConfig({"epochs": 40, "batch_size": 8, "learning_rate": 5e-3, "seed": 1})
        cls.aae, cls.history = train_aae(cls.images, cfg, validation=toy_images(8, seed=1), **TOY_AAE)

    def test_latent_widths_checked(self):
        with self.assertRaises(ConfigError):
            AaeModel.build((16, 8, 4), (3, 8, 16), (4, 4, 1))

    def test_default_architecture(self):
        aae = AaeModel.build(seed=0)
        self.assertEqual(aae.latent_dim, 100)
        self.assertEqual(aae.encoder.widths, [4096, 1000, 500, 100])
        self.assertEqual(aae.discriminator.output_width, 1)

    def test_generator_range(self):
        out = generate(self.aae, np.random.default_rng(0).normal(scale=10, size=(5, 4)))
        self.assertTrue(((out >= 0) & (out <= 1)).all())

    def test_binary_reconstruction(self):
        binary = reconstruct_binary(self.aae, self.images[:3])
        self.assertEqual(binary.shape, (3, 16))
        self.assertTrue(np.isin(binary, (0, 1)).all())

    def test_reconstruction_improves(self):
        column = self.history.column("reconstruction")
        self.assertEqual(len(self.history), 40)
        self.assertLess(column[-1], column[0])
        self.assertTrue(np.isfinite(self.history.column("val_reconstruction")).all())

    def test_encode_is_pure(self):
        np.testing.assert_array_equal(encode(self.aae, self.images[:2]), encode(self.aae, self.images[:2]))
        self.assertEqual(reconstruct(self.aae, self.images[0]).shape, (16,))

    def test_empty_training_set(self):
        with self.assertRaises(ConfigError):
            train_aae(np.zeros((0, 16)), **TOY_AAE)


class TestStandardizer(unittest.TestCase):
    def test_blocks_are_zero_mean_unit_std(self):
        F = np.random.default_rng(0).uniform(1, 5, size=(20, 10))
        F[:, 5:] *= 100
        std = Standardizer.fit(F, 2)
        Z = std.transform(F).reshape(20, 2, 5)
        np.testing.assert_allclose(Z.mean(axis=(0, 2)), 0, atol=1e-12)
        np.testing.assert_allclose(Z.std(axis=(0, 2)), 1)
        np.testing.assert_allclose(std.inverse(std.transform(F)), F)

    def test_constant_block(self):
        std = Standardizer.fit(np.ones((4, 6)), 3)
        np.testing.assert_array_equal(std.std, 1)

    def test_dict_round_trip(self):
        std = Standardizer([1.0, 2.0], [3.0, 4.0])
        again = Standardizer.from_dict(std.to_dict())
        np.testing.assert_array_equal(again.mean, std.mean)
        np.testing.assert_array_equal(again.std, std.std)

    def test_indivisible_width(self):
        with self.assertRaises(ShapeMismatchError):
            Standardizer.fit(np.ones((4, 7)), 2)


class TestFnnAndInn(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.images = toy_images()
        cls.farfields = toy_farfields(cls.images)
        cls.aae, cls.fnn, cls.fnn_history = toy_decoders(cls.images, cls.farfields)
        inn_cfg = TrainConfig({"epochs": 30, "batch_size": 8, "learning_rate": 5e-3, "kl_weight": 1e-3})
        cls.generator_hash = cls.aae.generator.parameter_hash()
        cls.fnn_hash = cls.fnn.net.parameter_hash()
        cls.inn, cls.inn_history = train_inn(
            cls.farfields[:40], cls.aae, cls.fnn, inn_cfg, validation=cls.farfields[40:], widths=TOY_INN,
        )

    def test_fnn_learns(self):
        column = self.fnn_history.column("train_mse")
        self.assertLess(column[-1], 0.5 * column[0])
        self.assertEqual(self.fnn.standardizer.blocks, 2)

    def test_fnn_predicts_physical_units(self):
        prediction = predict(self.fnn, self.images[:5])
        self.assertEqual(prediction.shape, (5, 10))
        self.assertLess(np.abs(prediction.mean() - self.farfields.mean()) / self.farfields.mean(), 0.5)

    def test_fnn_rejects_wrong_width(self):
        with self.assertRaises(ShapeMismatchError):
            train_fnn(self.images, self.farfields[:, :8], {"epochs": 1}, blocks=2, widths=TOY_FNN)

    def test_decoders_stay_frozen(self):
        self.assertEqual(self.aae.generator.parameter_hash(), self.generator_hash)
        self.assertEqual(self.fnn.net.parameter_hash(), self.fnn_hash)

    def test_inn_history(self):
        self.assertEqual(len(self.inn_history), 30)
        for name in ("loss", "mae", "kl", "val_mae"):
            self.assertTrue(np.isfinite(self.inn_history.column(name)).all(), name)
        val = validation_mae(self.inn, self.aae, self.fnn, self.farfields[40:])
        self.assertAlmostEqual(val, self.inn_history.column("val_mae")[-1], places=5)

    def test_invert_modes(self):
        z, image = invert(self.inn, self.aae, self.farfields[0])
        again, _ = invert(self.inn, self.aae.generator, self.farfields[0])
        np.testing.assert_array_equal(z, again)
        self.assertEqual(z.shape, (4,))
        self.assertEqual(image.shape, (16,))
        s1, _ = invert(self.inn, self.aae, self.farfields[0], mode="sample", seed=3)
        s2, _ = invert(self.inn, self.aae, self.farfields[0], mode="sample", seed=3)
        np.testing.assert_array_equal(s1, s2)
        with self.assertRaises(ConfigError):
            invert(self.inn, self.aae, self.farfields[0], mode="median")

    def test_sample_diversity(self):
        images, score = sample_diversity(self.inn, self.aae, self.farfields[0], 5, seed=0)
        self.assertEqual(images.shape, (5, 16))
        self.assertLessEqual(score, 1.0 + 1e-12)
        self.assertEqual(sample_diversity(self.inn, self.aae, self.farfields[0], 1)[1], 1.0)

    def test_inn_width_mismatch(self):
        with self.assertRaises(ShapeMismatchError):
            train_inn(self.farfields, self.aae, self.fnn, {"epochs": 1}, widths=(12, 8))

    def test_inn_default_architecture(self):
        inn = InnModel.build()
        self.assertEqual(inn.input_width, 435)
        self.assertEqual(inn.latent_dim, 100)
        self.assertEqual(FnnModel.build().output_width, 435)


class TestTrainingRepeatable(unittest.TestCase):
    def test_reruns_are_bitwise_equal(self):
        images = toy_images()
        farfields = toy_farfields(images)
        cfg = TrainConfig({"epochs": 5, "batch_size": 8, "learning_rate": 5e-3, "seed": 3})
        runs = [train_fnn(images, farfields, cfg, blocks=2, widths=TOY_FNN) for _ in range(2)]
        self.assertEqual(runs[0][0].net.parameter_hash(), runs[1][0].net.parameter_hash())
        np.testing.assert_array_equal(runs[0][1].column("train_mse"), runs[1][1].column("train_mse"))
        aaes = [train_aae(images, cfg, **TOY_AAE)[0] for _ in range(2)]
        for name in ("encoder", "generator", "discriminator"):
            self.assertEqual(getattr(aaes[0], name).parameter_hash(), getattr(aaes[1], name).parameter_hash())


class TestInverseTraining(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.images = toy_images()
        cls.farfields = toy_farfields(cls.images)
        cls.aae, cls.fnn, _ = toy_decoders(cls.images, cls.farfields)

    def test_kl_falls_as_weight_rises(self):
        kl = []
        for alpha in (0.0, 1e-5, 1e-2):
            cfg = TrainConfig({"epochs": 60, "batch_size": 8, "learning_rate": 5e-3, "kl_weight": alpha, "seed": 2})
            _, history = train_inn(self.farfields[:40], self.aae, self.fnn, cfg, widths=TOY_INN)
            kl.append(history.column("kl")[-5:].mean())
        self.assertGreater(kl[0], kl[1])
        self.assertGreater(kl[1], kl[2])

    def test_round_trip_through_decoder(self):
        z0 = np.random.default_rng(5).normal(size=(64, 4))
        target = predict(self.fnn, threshold(generate(self.aae, z0)))
        cfg = TrainConfig({"epochs": 200, "batch_size": 8, "learning_rate": 5e-3, "kl_weight": 1e-5, "seed": 4})
        inn, _ = train_inn(target, self.aae, self.fnn, cfg, widths=TOY_INN)
        _, image = invert(inn, self.aae, target)
        self.assertLess(relative_l2(predict(self.fnn, image), target), 0.10)


@unittest.skipUnless(SLOW, "set SCATTERSHAPE_SLOW=1 for desk-scale training")
class TestAaeAcceptance(unittest.TestCase):
    def test_reconstruction_quality(self):
        images = np.array([im.flatten() for im in ShapeGenerator().generate(2000, seed=1)], dtype=float)
        cfg = TrainConfig({"epochs": 200, "batch_size": 32, "learning_rate": 1e-4, "seed": 1})
        aae, _ = train_aae(images[:1600], cfg, validation=images[1600:1800])
        reports = shape_reports(images[1800:], reconstruct(aae, images[1800:]), "test")
        self.assertGreaterEqual(reports["ssim"].mean, 0.85)
        self.assertLessEqual(reports["bce"].mean, 0.08)


class TestFreeze(unittest.TestCase):
    def test_modification_detected(self):
        aae = AaeModel.build(**TOY_AAE)
        with self.assertRaises(FrozenModelError):
            with freeze(generator=aae.generator):
                aae.generator.layers[0].bias += 1

    def test_untouched_passes(self):
        aae = AaeModel.build(**TOY_AAE)
        with freeze(generator=aae.generator) as frozen:
            generate(aae, np.zeros(4))
        self.assertEqual(frozen.changed(), [])


class TestMasking(unittest.TestCase):
    def test_halfplane_keeps_44_angles(self):
        self.assertEqual(kept_angles(0, 180).sum(), 44)
        self.assertEqual(angular_mask(np.zeros((3, 435)), 0, 180).shape, (3, 220))
        self.assertEqual(kept_angles(0, 360).sum(), 87)

    def test_invalid_ranges(self):
        with self.assertRaises(ConfigError):
            kept_angles(200, 100)
        with self.assertRaises(ConfigError):
            kept_angles(1.0, 2.0)

    def test_frequency_blocks(self):
        F = np.arange(435.0)
        self.assertEqual(frequency_block_select(F, 3).shape, (261,))
        selected = frequency_block_select(F, [1, 4])
        np.testing.assert_array_equal(selected[:87], F[87:174])
        np.testing.assert_array_equal(selected[87:], F[348:])
        with self.assertRaises(ConfigError):
            frequency_block_select(F, [5])

    def test_variant_widths(self):
        for k in range(1, 6):
            fnn_widths, inn_widths = frequency_variant_widths(k)
            self.assertEqual(fnn_widths[-1], 87 * k)
            self.assertEqual(inn_widths[0], 87 * k)
            self.assertEqual(inn_widths[-1], 100)
        with self.assertRaises(ConfigError):
            frequency_variant_widths(6)

    def test_halfplane_widths(self):
        fnn_widths, inn_widths = halfplane_widths(220)
        self.assertEqual(fnn_widths[-1], 220)
        self.assertEqual(inn_widths[0], 220)


if __name__ == '__main__':
    unittest.main()
