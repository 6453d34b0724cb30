"""Forward surrogate: flattened shape image -> multifrequency far-field amplitudes."""
import logging

import numpy as np
from tqdm import tqdm

from ...errors import ConfigError, DivergenceError, ShapeMismatchError
from ..nn import Activation, Adam, History, MlpModel, TrainConfig, as_network_input, loss_mse, minibatches
from ..scatter import FREQUENCIES, FarFieldSet

log = logging.getLogger(__name__)

FNN_WIDTHS = (4096, 1000, 1000, 800, 800, 800, 800, 600, 600, 600, 435)


class Standardizer:
    """Per-frequency-block z-score: one mean and one std for each block of angles"""

    def __init__(self, mean, std):
        self.mean = np.asarray(mean, dtype=float)
        self.std = np.asarray(std, dtype=float)

    @classmethod
    def fit(cls, farfields, blocks):
        F = np.asarray(farfields, dtype=float)
        if F.ndim != 2 or F.shape[1] % blocks:
            raise ShapeMismatchError(f"far-field width {F.shape[-1]} is not divisible into {blocks} blocks")
        per_block = F.reshape(len(F), blocks, -1)
        mean = per_block.mean(axis=(0, 2))
        std = per_block.std(axis=(0, 2))
        std[std == 0] = 1.0
        return cls(mean, std)

    @classmethod
    def identity(cls, blocks):
        return cls(np.zeros(blocks), np.ones(blocks))

    @property
    def blocks(self):
        return len(self.mean)

    def _expand(self, values, width):
        return np.repeat(values, width // self.blocks)

    def transform(self, farfields):
        F = np.asarray(farfields, dtype=float)
        width = F.shape[-1]
        return (F - self._expand(self.mean, width)) / self._expand(self.std, width)

    def inverse(self, standardized):
        S = np.asarray(standardized, dtype=float)
        width = S.shape[-1]
        return S * self._expand(self.std, width) + self._expand(self.mean, width)

    def to_dict(self):
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(data["mean"], data["std"])


class FnnModel:
    kind = "fnn"

    def __init__(self, net, standardizer=None):
        self.net = net
        self.standardizer = standardizer if standardizer is not None else Standardizer.identity(1)

    @classmethod
    def build(cls, widths=FNN_WIDTHS, seed=0, dtype=np.float32, standardizer=None):
        return cls(MlpModel.build(widths, output=Activation.IDENTITY, seed=seed, dtype=dtype), standardizer)

    @property
    def output_width(self):
        return self.net.output_width

    def networks(self):
        return {"fnn": self.net}

    @classmethod
    def from_networks(cls, networks, standardizer=None):
        return cls(networks["fnn"], standardizer)


def predict(fnn, image):
    """Far-field amplitudes in physical units for one image or a batch"""
    return fnn.standardizer.inverse(fnn.net(as_network_input(image, fnn.net.input_width)))


def predict_set(fnn, image, frequencies=FREQUENCIES):
    return FarFieldSet.from_vector(predict(fnn, image), frequencies)


def train_fnn(images, farfields, cfg=None, validation=None, blocks=len(FREQUENCIES),
              widths=FNN_WIDTHS, model=None, progress=False):
    """Minimize MSE between standardized targets and predictions.

    `validation` is an optional (images, farfields) pair. Returns (FnnModel, History).
    """
    cfg = cfg if isinstance(cfg, TrainConfig) else TrainConfig(cfg)
    if len(images) == 0:
        raise ConfigError("FNN training set is empty")
    x_all = np.asarray(images, dtype=cfg.np_dtype).reshape(len(images), -1)
    F_all = np.asarray(farfields, dtype=float)
    if len(x_all) != len(F_all):
        raise ShapeMismatchError(f"{len(x_all)} images but {len(F_all)} far fields")

    standardizer = Standardizer.fit(F_all, blocks)
    fnn = model if model is not None else FnnModel.build(widths, cfg.seed, cfg.np_dtype)
    fnn.standardizer = standardizer
    if fnn.output_width != F_all.shape[1]:
        raise ShapeMismatchError(f"FNN output width {fnn.output_width} does not match targets {F_all.shape[1]}")
    y_all = standardizer.transform(F_all).astype(cfg.np_dtype)
    val = None
    if validation is not None and len(validation[0]):
        val = (
            np.asarray(validation[0], dtype=cfg.np_dtype).reshape(len(validation[0]), -1),
            standardizer.transform(validation[1]),
        )

    rng = np.random.default_rng(cfg.seed)
    optimizer = Adam(fnn.net, cfg)
    history = History("train_mse", "val_mse")
    for epoch in tqdm(range(cfg.epochs), desc="fnn", disable=not progress):
        total = 0.0
        for idx in minibatches(len(x_all), cfg.batch_size, rng):
            out, tape = fnn.net.forward(x_all[idx])
            loss, grad = loss_mse(y_all[idx], out)
            optimizer.step(fnn.net.backward(tape, grad))
            total += loss * len(idx)
        train_mse = total / len(x_all)
        if not np.isfinite(train_mse):
            raise DivergenceError("fnn", epoch)
        val_mse = loss_mse(val[1], fnn.net(val[0]))[0] if val is not None else np.nan
        history.record(epoch, train_mse=train_mse, val_mse=val_mse)
        log.info("fnn epoch %d: train %.5f val %.5f", epoch, train_mse, val_mse)
    return fnn, history
