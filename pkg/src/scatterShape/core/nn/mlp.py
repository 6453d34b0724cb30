import hashlib
from enum import Enum

import numpy as np

from ...errors import ShapeMismatchError, StaleTapeError

LEAKY_SLOPE = 0.2


class Activation(Enum):
    """Per-layer nonlinearity"""

    LEAKY_RELU = "leaky_relu"
    SIGMOID = "sigmoid"
    IDENTITY = "identity"


def sigmoid(z):
    # Split by sign so exp never overflows
    out = np.empty_like(z)
    positive = z >= 0
    out[positive] = 1 / (1 + np.exp(-z[positive]))
    ez = np.exp(z[~positive])
    out[~positive] = ez / (1 + ez)
    return out


def activate(z, activation, slope=LEAKY_SLOPE):
    if activation is Activation.LEAKY_RELU:
        return np.where(z > 0, z, slope * z)
    if activation is Activation.SIGMOID:
        return sigmoid(z)
    return z


def activation_derivative(z, y, activation, slope=LEAKY_SLOPE):
    """dy/dz given pre-activation z and output y"""
    if activation is Activation.LEAKY_RELU:
        return np.where(z > 0, 1.0, slope).astype(z.dtype)
    if activation is Activation.SIGMOID:
        return y * (1 - y)
    return np.ones_like(z)


class Layer:
    def __init__(self, weights, bias, activation=Activation.IDENTITY, slope=LEAKY_SLOPE):
        self.weights = weights
        self.bias = bias
        self.activation = Activation(activation)
        self.slope = float(slope)

    @property
    def fan_in(self):
        return self.weights.shape[1]

    @property
    def fan_out(self):
        return self.weights.shape[0]


class Tape:
    """Cached inputs, pre-activations and outputs of one forward pass"""

    def __init__(self, version, squeeze):
        self.version = version
        self.squeeze = squeeze
        self.inputs = []
        self.pre_activations = []
        self.outputs = []


class Gradients:
    def __init__(self, layers, input_gradient):
        # One (dW, db) pair per layer
        self.layers = layers
        self.input = input_gradient

    def arrays(self):
        return [g for pair in self.layers for g in pair]

    def scaled(self, factor):
        return Gradients([(dw * factor, db * factor) for dw, db in self.layers], self.input)

    def __add__(self, other):
        return Gradients(
            [(a + c, b + d) for (a, b), (c, d) in zip(self.layers, other.layers)],
            self.input,
        )


class MlpModel:
    """Dense network: per layer y = act(W x + b), W stored out × in.

    Inputs may be one vector or a batch of row vectors.
    """

    def __init__(self, layers, seed=0):
        for prev, nxt in zip(layers, layers[1:]):
            if prev.fan_out != nxt.fan_in:
                raise ShapeMismatchError(f"layer widths do not chain: {prev.fan_out} -> {nxt.fan_in}")
        self.layers = list(layers)
        self.seed = seed
        # Bumped on every parameter update; tapes from older versions are stale
        self.version = 0

    @classmethod
    def build(cls, widths, hidden=Activation.LEAKY_RELU, output=Activation.IDENTITY,
              seed=0, dtype=np.float64, slope=LEAKY_SLOPE):
        """Glorot-uniform weights in ±sqrt(6/(fan_in+fan_out)), zero biases"""
        if len(widths) < 2:
            raise ShapeMismatchError(f"need at least input and output widths, got {widths}")
        rng = np.random.default_rng(seed)
        layers = []
        for i, (fan_in, fan_out) in enumerate(zip(widths, widths[1:])):
            limit = np.sqrt(6 / (fan_in + fan_out))
            weights = rng.uniform(-limit, limit, size=(fan_out, fan_in)).astype(dtype)
            bias = np.zeros(fan_out, dtype=dtype)
            activation = output if i == len(widths) - 2 else hidden
            layers.append(Layer(weights, bias, activation, slope))
        return cls(layers, seed)

    @property
    def widths(self):
        return [self.layers[0].fan_in] + [layer.fan_out for layer in self.layers]

    @property
    def input_width(self):
        return self.layers[0].fan_in

    @property
    def output_width(self):
        return self.layers[-1].fan_out

    @property
    def dtype(self):
        return self.layers[0].weights.dtype

    def parameters(self):
        return [p for layer in self.layers for p in (layer.weights, layer.bias)]

    def parameter_count(self):
        return sum(p.size for p in self.parameters())

    def parameter_hash(self):
        digest = hashlib.sha256()
        for p in self.parameters():
            digest.update(np.ascontiguousarray(p).tobytes())
        return digest.hexdigest()

    def is_finite(self):
        return all(np.isfinite(p).all() for p in self.parameters())

    def touch(self):
        self.version += 1

    def copy(self):
        layers = [Layer(ly.weights.copy(), ly.bias.copy(), ly.activation, ly.slope) for ly in self.layers]
        return MlpModel(layers, self.seed)

    def astype(self, dtype):
        layers = [
            Layer(ly.weights.astype(dtype), ly.bias.astype(dtype), ly.activation, ly.slope)
            for ly in self.layers
        ]
        return MlpModel(layers, self.seed)

    def forward(self, x):
        return forward(self, x)

    def backward(self, tape, output_gradient):
        return backward(self, tape, output_gradient)

    def __call__(self, x):
        return forward(self, x)[0]

    def __repr__(self):
        widths = "-".join(str(w) for w in self.widths)
        return f"MlpModel({widths})"


def forward(model, x):
    x = np.asarray(x, dtype=model.dtype)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.shape[1] != model.input_width:
        raise ShapeMismatchError(f"input width {x.shape[1]} does not match model input {model.input_width}")
    tape = Tape(model.version, squeeze)
    for layer in model.layers:
        tape.inputs.append(x)
        z = x @ layer.weights.T + layer.bias
        x = activate(z, layer.activation, layer.slope)
        tape.pre_activations.append(z)
        tape.outputs.append(x)
    return (x[0] if squeeze else x), tape


def backward(model, tape, output_gradient):
    """Reverse-mode gradients of a scalar loss given dL/d(output)"""
    if tape.version != model.version:
        raise StaleTapeError(
            f"tape recorded at parameter version {tape.version}, model is at {model.version}"
        )
    grad = np.asarray(output_gradient, dtype=model.dtype)
    if grad.ndim == 1:
        grad = grad[None, :]
    layer_grads = [None] * len(model.layers)
    for i in reversed(range(len(model.layers))):
        layer = model.layers[i]
        delta = grad * activation_derivative(
            tape.pre_activations[i], tape.outputs[i], layer.activation, layer.slope
        )
        layer_grads[i] = (delta.T @ tape.inputs[i], delta.sum(axis=0))
        grad = delta @ layer.weights
    return Gradients(layer_grads, grad[0] if tape.squeeze else grad)


def as_network_input(x, width):
    """Flatten images to the network's input layout: one vector or one row per sample"""
    if hasattr(x, "flatten") and not isinstance(x, np.ndarray):
        x = x.flatten()
    x = np.asarray(x)
    if x.ndim == 1 or (x.ndim == 2 and x.shape[1] == width):
        return x
    if x.ndim == 2 and x.size == width:
        return x.reshape(-1)
    return x.reshape(len(x), -1)
