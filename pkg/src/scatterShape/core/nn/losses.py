"""Loss functions returning (value, gradient w.r.t. the prediction).

Inputs may be single vectors or batches of row vectors.
"""
import numpy as np

from ...errors import ShapeMismatchError

BCE_CLAMP = 1e-7
LOG_VAR_MIN = -20.0
LOG_VAR_MAX = 10.0


def _check_lengths(target, prediction):
    if np.shape(target) != np.shape(prediction):
        raise ShapeMismatchError(
            f"target shape {np.shape(target)} does not match prediction {np.shape(prediction)}"
        )


def loss_bce(y, y_hat):
    """-(1/N) Σ [y log ŷ + (1-y) log(1-ŷ)], ŷ clamped to [ε, 1-ε]"""
    _check_lengths(y, y_hat)
    y = np.asarray(y, dtype=float)
    p = np.clip(np.asarray(y_hat, dtype=float), BCE_CLAMP, 1 - BCE_CLAMP)
    count = p.size
    value = -np.mean(y * np.log(p) + (1 - y) * np.log(1 - p))
    grad = (-y / p + (1 - y) / (1 - p)) / count
    return float(value), grad


def loss_mse(target, prediction):
    _check_lengths(target, prediction)
    diff = np.asarray(prediction, dtype=float) - np.asarray(target, dtype=float)
    return float(np.mean(diff ** 2)), 2 * diff / diff.size


def loss_mae(target, prediction):
    """Mean absolute error; subgradient 0 at ties"""
    _check_lengths(target, prediction)
    diff = np.asarray(prediction, dtype=float) - np.asarray(target, dtype=float)
    return float(np.mean(np.abs(diff))), np.sign(diff) / diff.size


class GaussianLatentParams:
    """Diagonal Gaussian (μ, log σ²); log σ² clamped to [-20, 10]"""

    def __init__(self, mu, log_var):
        self.mu = np.asarray(mu, dtype=float)
        raw = np.asarray(log_var, dtype=float)
        self.log_var = np.clip(raw, LOG_VAR_MIN, LOG_VAR_MAX)
        # Clamped entries pass no gradient back to the raw head output
        self.log_var_active = (raw >= LOG_VAR_MIN) & (raw <= LOG_VAR_MAX)

    @property
    def sigma(self):
        return np.exp(self.log_var / 2)

    @property
    def dim(self):
        return self.mu.shape[-1]


def loss_kl(params):
    """-½ Σ_p (1 + log σ² - μ² - σ²), summed over the latent dimension and
    averaged over the batch; returns (value, dμ, d log σ²).
    """
    mu, log_var = params.mu, params.log_var
    batch = mu.shape[0] if mu.ndim == 2 else 1
    per_sample = -0.5 * np.sum(1 + log_var - mu ** 2 - np.exp(log_var), axis=-1)
    grad_mu = mu / batch
    grad_log_var = -0.5 * (1 - np.exp(log_var)) / batch * params.log_var_active
    return float(np.mean(per_sample)), grad_mu, grad_log_var


def loss_inn(target, prediction, params, alpha):
    """L_MAE + α L_KL per sample, averaged over the batch.

    Returns (value, d prediction, dμ, d log σ²).
    """
    if alpha < 0:
        raise ValueError(f"KL weight must be non-negative, got {alpha}")
    target = np.asarray(target, dtype=float)
    prediction = np.asarray(prediction, dtype=float)
    _check_lengths(target, prediction)
    # Per-sample mean over features, then batch mean: equal to the global mean
    mae, grad_pred = loss_mae(target, prediction)
    kl, grad_mu, grad_log_var = loss_kl(params)
    return mae + alpha * kl, grad_pred, alpha * grad_mu, alpha * grad_log_var


def reparameterize(params, eps):
    """z = μ + σ ⊙ ε"""
    eps = np.asarray(eps, dtype=float)
    if eps.shape != params.mu.shape:
        raise ShapeMismatchError(f"noise shape {eps.shape} does not match latent shape {params.mu.shape}")
    return params.mu + params.sigma * eps


def reparameterize_backward(params, eps, grad_z):
    """(dμ, d log σ²) from dL/dz"""
    grad_z = np.asarray(grad_z, dtype=float)
    grad_log_var = grad_z * np.asarray(eps) * params.sigma / 2 * params.log_var_active
    return grad_z, grad_log_var
