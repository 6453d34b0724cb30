"""Variational inverse network: far-field amplitudes -> Gaussian latent parameters.

Trained through the frozen generator and forward surrogate, so the loss only
compares far fields; the shape is never seen during training.
"""
import logging
from itertools import combinations

import numpy as np
from tqdm import tqdm

from ...errors import ConfigError, DivergenceError, ShapeMismatchError
from ..geometry import threshold
from ..metrics import ssim
from ..nn import (
    Activation, Adam, GaussianLatentParams, History, MlpModel, TrainConfig, loss_inn, loss_kl, minibatches,
    reparameterize, reparameterize_backward,
)
from .aae import LATENT_DIM
from .fnn import Standardizer
from .frozen import freeze

log = logging.getLogger(__name__)

INN_WIDTHS = (435, 800, 800, 500, 500, 500, 400, LATENT_DIM)


class InnModel:
    kind = "inn"

    def __init__(self, trunk, mu_head, log_var_head, standardizer=None):
        for head in (mu_head, log_var_head):
            if head.input_width != trunk.output_width:
                raise ShapeMismatchError(
                    f"head input {head.input_width} does not match trunk output {trunk.output_width}"
                )
        self.trunk = trunk
        self.mu_head = mu_head
        self.log_var_head = log_var_head
        self.standardizer = standardizer if standardizer is not None else Standardizer.identity(1)

    @classmethod
    def build(cls, widths=INN_WIDTHS, latent_dim=LATENT_DIM, seed=0, dtype=np.float32, standardizer=None):
        seeds = np.random.SeedSequence(seed).generate_state(3)
        # Every trunk layer, the last included, is leaky
        trunk = MlpModel.build(widths, output=Activation.LEAKY_RELU, seed=int(seeds[0]), dtype=dtype)
        heads = [
            MlpModel.build((widths[-1], latent_dim), output=Activation.IDENTITY, seed=int(s), dtype=dtype)
            for s in seeds[1:]
        ]
        return cls(trunk, *heads, standardizer)

    @property
    def input_width(self):
        return self.trunk.input_width

    @property
    def latent_dim(self):
        return self.mu_head.output_width

    def networks(self):
        return {"trunk": self.trunk, "mu": self.mu_head, "log_var": self.log_var_head}

    @classmethod
    def from_networks(cls, networks, standardizer=None):
        return cls(networks["trunk"], networks["mu"], networks["log_var"], standardizer)

    def encode(self, farfield):
        """Latent parameters for physical-unit far field(s)"""
        h = self.trunk(self.standardizer.transform(farfield))
        return GaussianLatentParams(self.mu_head(h), self.log_var_head(h))


def _generator_of(model):
    return getattr(model, "generator", model)


def invert(inn, generator, farfield, mode="mean", seed=None):
    """(z, image) for a far field; mode "mean" uses z = μ, "sample" draws z ~ N(μ, σ²)"""
    params = inn.encode(np.asarray(farfield, dtype=float))
    if mode == "mean":
        z = params.mu
    elif mode == "sample":
        rng = np.random.default_rng(seed)
        z = reparameterize(params, rng.standard_normal(params.mu.shape))
    else:
        raise ConfigError(f"unknown inversion mode {mode!r}, expected 'mean' or 'sample'")
    return z, _generator_of(generator)(z)


def sample_diversity(inn, generator, farfield, n, seed=0):
    """n sampled inversions of one far field and the mean pairwise SSIM of their binary images"""
    if n < 1:
        raise ConfigError(f"sample count must be at least 1, got {n}")
    params = inn.encode(np.asarray(farfield, dtype=float).reshape(-1))
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((n, params.dim))
    z = params.mu + params.sigma * eps
    images = threshold(_generator_of(generator)(z))
    pairs = [ssim(a, b) for a, b in combinations(images, 2)]
    return images, (float(np.mean(pairs)) if pairs else 1.0)


def _train_step(inn, generator, fnn_net, F_std, rng, alpha, optimizers):
    h, trunk_tape = inn.trunk.forward(F_std)
    mu, mu_tape = inn.mu_head.forward(h)
    log_var, lv_tape = inn.log_var_head.forward(h)
    params = GaussianLatentParams(mu, log_var)
    eps = rng.standard_normal(mu.shape)
    z = reparameterize(params, eps)
    image, gen_tape = generator.forward(z)
    F_hat, fnn_tape = fnn_net.forward(image)
    loss, grad_F, grad_mu_kl, grad_lv_kl = loss_inn(F_std, F_hat, params, alpha)

    # Through the frozen decoder; its parameter gradients are discarded
    grad_image = fnn_net.backward(fnn_tape, grad_F).input
    grad_z = generator.backward(gen_tape, grad_image).input
    grad_mu, grad_lv = reparameterize_backward(params, eps, grad_z)
    mu_grads = inn.mu_head.backward(mu_tape, grad_mu + grad_mu_kl)
    lv_grads = inn.log_var_head.backward(lv_tape, grad_lv + grad_lv_kl)
    trunk_grads = inn.trunk.backward(trunk_tape, mu_grads.input + lv_grads.input)

    opt_trunk, opt_mu, opt_lv = optimizers
    opt_trunk.step(trunk_grads)
    opt_mu.step(mu_grads)
    opt_lv.step(lv_grads)

    return loss, float(np.mean(np.abs(F_hat - F_std))), loss_kl(params)[0]


def validation_mae(inn, generator, fnn, farfields):
    """Standardized-space MAE of FNN(G(μ)) against the input far fields"""
    F_std = fnn.standardizer.transform(farfields)
    params = inn.encode(farfields)
    return float(np.mean(np.abs(fnn.net(_generator_of(generator)(params.mu)) - F_std)))


def train_inn(farfields, generator, fnn, cfg=None, validation=None, widths=None, progress=False):
    """Train an InnModel through the frozen generator and forward surrogate.

    `generator` is an AaeModel or its generator network; `fnn` an FnnModel
    whose standardizer is reused for the INN input. Raises FrozenModelError
    if either decoder network changes. Returns (InnModel, History).
    """
    cfg = cfg if isinstance(cfg, TrainConfig) else TrainConfig(cfg)
    generator = _generator_of(generator)
    F_all = np.asarray(farfields, dtype=float)
    if len(F_all) == 0:
        raise ConfigError("INN training set is empty")
    widths = tuple(widths) if widths is not None else (F_all.shape[1],) + INN_WIDTHS[1:]
    if widths[0] != F_all.shape[1] or fnn.output_width != F_all.shape[1]:
        raise ShapeMismatchError(
            f"far-field width {F_all.shape[1]} must match INN input {widths[0]} and FNN output {fnn.output_width}"
        )
    inn = InnModel.build(widths, generator.input_width, cfg.seed, cfg.np_dtype, fnn.standardizer)
    F_std = fnn.standardizer.transform(F_all).astype(cfg.np_dtype)

    rng = np.random.default_rng(cfg.seed)
    optimizers = (Adam(inn.trunk, cfg), Adam(inn.mu_head, cfg), Adam(inn.log_var_head, cfg))
    history = History("loss", "mae", "kl", "val_mae")
    with freeze(generator=generator, fnn=fnn.net):
        for epoch in tqdm(range(cfg.epochs), desc="inn", disable=not progress):
            totals = np.zeros(3)
            for idx in minibatches(len(F_std), cfg.batch_size, rng):
                step = _train_step(inn, generator, fnn.net, F_std[idx], rng, cfg.kl_weight, optimizers)
                totals += np.array(step) * len(idx)
            loss, mae, kl = totals / len(F_std)
            if not np.isfinite(loss):
                raise DivergenceError("inn", epoch)
            val = np.nan
            if validation is not None and len(validation):
                val = validation_mae(inn, generator, fnn, validation)
            history.record(epoch, loss=loss, mae=mae, kl=kl, val_mae=val)
            log.info("inn epoch %d: loss %.5f mae %.5f kl %.3f", epoch, loss, mae, kl)
    return inn, history
