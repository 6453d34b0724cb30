from .mlp import MlpModel, Layer, Activation, Gradients, Tape, forward, backward, as_network_input
from .losses import (
    GaussianLatentParams, loss_bce, loss_mse, loss_mae, loss_kl, loss_inn,
    reparameterize, reparameterize_backward,
)
from .optim import TrainConfig, AdamState, Adam, adam_step, minibatches, History
