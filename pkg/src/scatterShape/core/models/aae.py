"""Adversarial autoencoder over flattened 64×64 shape images.

The encoder maps an image to a 100-dimensional latent vector, the generator
maps it back, and the discriminator pushes encoded latents toward N(0, I).
"""
import logging

import numpy as np
from tqdm import tqdm

from ...errors import ConfigError, DivergenceError
from ..geometry import threshold
from ..nn import Activation, Adam, History, MlpModel, TrainConfig, as_network_input, loss_bce, minibatches

log = logging.getLogger(__name__)

LATENT_DIM = 100
ENCODER_WIDTHS = (4096, 1000, 500, LATENT_DIM)
GENERATOR_WIDTHS = (LATENT_DIM, 500, 1000, 4096)
DISCRIMINATOR_WIDTHS = (LATENT_DIM, 500, 500, 1)


class AaeModel:
    kind = "aae"

    def __init__(self, encoder, generator, discriminator):
        if not (encoder.output_width == generator.input_width == discriminator.input_width):
            raise ConfigError(
                f"latent widths disagree: encoder {encoder.output_width}, "
                f"generator {generator.input_width}, discriminator {discriminator.input_width}"
            )
        self.encoder = encoder
        self.generator = generator
        self.discriminator = discriminator

    @classmethod
    def build(cls, encoder_widths=ENCODER_WIDTHS, generator_widths=GENERATOR_WIDTHS,
              discriminator_widths=DISCRIMINATOR_WIDTHS, seed=0, dtype=np.float32):
        seeds = np.random.SeedSequence(seed).generate_state(3)
        return cls(
            MlpModel.build(encoder_widths, output=Activation.IDENTITY, seed=int(seeds[0]), dtype=dtype),
            MlpModel.build(generator_widths, output=Activation.SIGMOID, seed=int(seeds[1]), dtype=dtype),
            MlpModel.build(discriminator_widths, output=Activation.SIGMOID, seed=int(seeds[2]), dtype=dtype),
        )

    @property
    def latent_dim(self):
        return self.encoder.output_width

    def networks(self):
        return {"encoder": self.encoder, "generator": self.generator, "discriminator": self.discriminator}

    @classmethod
    def from_networks(cls, networks, standardizer=None):
        return cls(networks["encoder"], networks["generator"], networks["discriminator"])


def encode(aae, image):
    return aae.encoder(as_network_input(image, aae.encoder.input_width))


def generate(aae, z):
    """Real-valued image in (0, 1) from latent vector(s)"""
    return aae.generator(z)


def reconstruct(aae, image):
    return aae.generator(encode(aae, image))


def reconstruct_binary(aae, image):
    return threshold(reconstruct(aae, image))


def _reconstruction_phase(aae, x, opt_encoder, opt_generator):
    z, enc_tape = aae.encoder.forward(x)
    x_hat, gen_tape = aae.generator.forward(z)
    loss, grad = loss_bce(x, x_hat)
    gen_grads = aae.generator.backward(gen_tape, grad)
    enc_grads = aae.encoder.backward(enc_tape, gen_grads.input)
    opt_generator.step(gen_grads)
    opt_encoder.step(enc_grads)
    return loss


def _discriminator_phase(aae, x, rng, opt_discriminator):
    # Prior samples are labelled real (1), encoded latents fake (0)
    z_fake = aae.encoder(x)
    z_real = rng.standard_normal(z_fake.shape).astype(z_fake.dtype)
    d_real, real_tape = aae.discriminator.forward(z_real)
    d_fake, fake_tape = aae.discriminator.forward(z_fake)
    loss_real, grad_real = loss_bce(np.ones_like(d_real), d_real)
    loss_fake, grad_fake = loss_bce(np.zeros_like(d_fake), d_fake)
    grads = aae.discriminator.backward(real_tape, grad_real) + aae.discriminator.backward(fake_tape, grad_fake)
    opt_discriminator.step(grads.scaled(0.5))
    return 0.5 * (loss_real + loss_fake)


def _regularization_phase(aae, x, opt_encoder):
    z, enc_tape = aae.encoder.forward(x)
    d, disc_tape = aae.discriminator.forward(z)
    loss, grad = loss_bce(np.ones_like(d), d)
    disc_grads = aae.discriminator.backward(disc_tape, grad)
    enc_grads = aae.encoder.backward(enc_tape, disc_grads.input)
    opt_encoder.step(enc_grads)
    return loss


def train_aae(images, cfg=None, validation=None, model=None, progress=False, **widths):
    """Three phases per batch: reconstruction, discriminator, regularization.

    Returns (AaeModel, History). `widths` may override encoder_widths,
    generator_widths and discriminator_widths.
    """
    cfg = cfg if isinstance(cfg, TrainConfig) else TrainConfig(cfg)
    if len(images) == 0:
        raise ConfigError("AAE training set is empty")
    x_all = np.asarray(images, dtype=cfg.np_dtype).reshape(len(images), -1)
    aae = model if model is not None else AaeModel.build(seed=cfg.seed, dtype=cfg.np_dtype, **widths)
    rng = np.random.default_rng(cfg.seed)

    opt_encoder = Adam(aae.encoder, cfg)
    opt_generator = Adam(aae.generator, cfg)
    opt_discriminator = Adam(aae.discriminator, cfg)
    # Separate moment estimates for the adversarial update of the encoder
    opt_regularizer = Adam(aae.encoder, cfg)

    history = History("reconstruction", "discriminator", "regularization", "val_reconstruction")
    for epoch in tqdm(range(cfg.epochs), desc="aae", disable=not progress):
        totals = np.zeros(3)
        batches = 0
        for idx in minibatches(len(x_all), cfg.batch_size, rng):
            x = x_all[idx]
            totals += (
                _reconstruction_phase(aae, x, opt_encoder, opt_generator),
                _discriminator_phase(aae, x, rng, opt_discriminator),
                _regularization_phase(aae, x, opt_regularizer),
            )
            batches += 1
        means = totals / batches
        if not np.isfinite(means).all():
            raise DivergenceError("aae", epoch)
        val = np.nan
        if validation is not None and len(validation):
            x_val = np.asarray(validation, dtype=cfg.np_dtype).reshape(len(validation), -1)
            val = loss_bce(x_val, reconstruct(aae, x_val))[0]
        history.record(epoch, reconstruction=means[0], discriminator=means[1],
                       regularization=means[2], val_reconstruction=val)
        log.info("aae epoch %d: reconstruction %.4f discriminator %.4f regularization %.4f",
                 epoch, *means)
    return aae, history
