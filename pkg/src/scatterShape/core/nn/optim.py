import numpy as np

from ...errors import ConfigError


class TrainConfig:
    def __init__(self, config=None):
        # Set default configuration
        self.set_default_config()

        # Update configuration
        if config:
            for attr, val in config.items():
                setattr(self, attr, val)

        # Calculate properties
        self.init_properties()

    def set_default_config(self):
        self.learning_rate = 1e-4
        self.batch_size = 32
        self.epochs = 200
        self.kl_weight = 1e-5
        self.beta1 = 0.9
        self.beta2 = 0.999
        self.eps = 1e-8
        self.seed = 0
        self.dtype = "float32"

    def init_properties(self):
        for name in ("learning_rate", "batch_size", "beta1", "beta2", "eps"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"training.{name} must be positive, got {getattr(self, name)}")
        if self.epochs < 0:
            raise ConfigError(f"training.epochs must be non-negative, got {self.epochs}")
        if self.kl_weight < 0:
            raise ConfigError(f"training.kl_weight must be non-negative, got {self.kl_weight}")
        if not (self.beta1 < 1 and self.beta2 < 1):
            raise ConfigError(f"Adam betas must lie in (0, 1), got {self.beta1}, {self.beta2}")
        self.batch_size = int(self.batch_size)
        self.epochs = int(self.epochs)
        self.seed = int(self.seed)
        self.np_dtype = np.dtype(self.dtype)

    def to_dict(self):
        return {
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "kl_weight": self.kl_weight,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "seed": self.seed,
            "dtype": self.dtype,
        }


class AdamState:
    """First and second moments shaped like the parameters, plus the step count"""

    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    @classmethod
    def for_model(cls, model, cfg=None):
        cfg = cfg if cfg is not None else TrainConfig()
        return cls(model.parameters(), cfg.beta1, cfg.beta2, cfg.eps)


def adam_step(state, params, grads, lr):
    """In-place bias-corrected Adam update; returns params"""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1 - b1 ** state.t
    correction2 = 1 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        g = np.asarray(g, dtype=p.dtype)
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        p -= (lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)).astype(p.dtype)
    return params


class Adam:
    """Optimizer bound to one model"""

    def __init__(self, model, cfg=None):
        self.cfg = cfg if cfg is not None else TrainConfig()
        self.model = model
        self.state = AdamState.for_model(model, self.cfg)

    def step(self, gradients):
        adam_step(self.state, self.model.parameters(), gradients.arrays(), self.cfg.learning_rate)
        self.model.touch()


def minibatches(count, batch_size, rng):
    """Shuffled index batches covering range(count) once"""
    order = rng.permutation(count)
    for start in range(0, count, batch_size):
        yield order[start:start + batch_size]


class History:
    """Per-epoch loss table"""

    def __init__(self, *columns):
        self.columns = ("epoch",) + tuple(columns)
        self.rows = []

    def record(self, epoch, **values):
        row = {"epoch": epoch}
        for name in self.columns[1:]:
            row[name] = float(values.get(name, np.nan))
        self.rows.append(row)
        return row

    def column(self, name):
        return np.array([row[name] for row in self.rows])

    def last(self):
        return self.rows[-1] if self.rows else None

    def __len__(self):
        return len(self.rows)
