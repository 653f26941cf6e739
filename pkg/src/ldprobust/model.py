"""Feed-forward ReLU classifier with hand-written forward and backward passes.

The backward pass returns gradients with respect to both the parameters (for
SGD) and the inputs (for FGSM). Loss is the batch-mean cross-entropy.
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataFormatError, InvalidArgument
from .tensor_core import check_finite, log_softmax

CHECKPOINT_MAGIC = b"LDPRMLP\x00"
CHECKPOINT_VERSION = 1


@dataclass
class MlpParams:
    """Weights ``W[l]`` of shape (fan_in, fan_out) and biases ``b[l]`` of shape (fan_out,)."""

    weights: list
    biases: list

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise InvalidArgument("need one bias per weight matrix and at least one layer")
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in self.biases]
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise InvalidArgument(f"layer {l}: weight {w.shape} and bias {b.shape} disagree")
            if l and w.shape[0] != self.weights[l - 1].shape[1]:
                raise InvalidArgument(f"layer {l} expects {w.shape[0]} inputs, previous layer gives "
                                      f"{self.weights[l - 1].shape[1]}")

    @property
    def layer_dims(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def n_params(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def arrays(self):
        """Parameter arrays in declaration order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def flatten(self):
        return np.concatenate([a.ravel() for a in self.arrays()])

    def unflatten(self, flat):
        """New params shaped like ``self`` holding the values of ``flat``."""
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.n_params,):
            raise InvalidArgument(f"expected {self.n_params} values, got shape {flat.shape}")
        weights, biases, pos = [], [], 0
        for w, b in zip(self.weights, self.biases):
            weights.append(flat[pos:pos + w.size].reshape(w.shape).copy())
            pos += w.size
            biases.append(flat[pos:pos + b.size].copy())
            pos += b.size
        return MlpParams(weights, biases)

    def copy(self):
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])


@dataclass
class LabeledBatch:
    """Inputs in [0, 1]^d, one row per example, and integer labels."""

    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=np.float64))
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if self.inputs.shape[0] != self.labels.shape[0]:
            raise InvalidArgument(f"{self.inputs.shape[0]} inputs but {self.labels.shape[0]} labels")
        if self.inputs.size and (self.inputs.min() < 0.0 or self.inputs.max() > 1.0):
            raise InvalidArgument("inputs must lie in [0, 1]")
        if self.labels.size and self.labels.min() < 0:
            raise InvalidArgument("labels must be non-negative")

    def __len__(self):
        return self.labels.shape[0]

    def subset(self, idx):
        return LabeledBatch(self.inputs[idx], self.labels[idx])


@dataclass
class ForwardTrace:
    params: MlpParams
    inputs: np.ndarray
    pre_activations: list = field(default_factory=list)
    activations: list = field(default_factory=list)
    logits: np.ndarray = None
    probs: np.ndarray = None


def init_params(layer_dims, seed):
    """Glorot-uniform weights, zero biases; deterministic per ``seed``."""
    dims = list(layer_dims)
    if len(dims) < 2 or any(int(d) != d or d <= 0 for d in dims):
        raise InvalidArgument(f"layer_dims must hold at least two positive integers, got {dims}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(int(fan_in), int(fan_out))))
        biases.append(np.zeros(int(fan_out)))
    return MlpParams(weights, biases)


def _as_inputs(params, batch):
    x = batch.inputs if isinstance(batch, LabeledBatch) else np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if x.ndim != 2 or x.shape[1] != params.layer_dims[0]:
        raise InvalidArgument(f"model expects inputs of width {params.layer_dims[0]}, got shape {x.shape}")
    return x


def forward(params, batch):
    """Return (class probabilities per row, trace for ``backward``).

    ``batch`` may be a ``LabeledBatch`` or a raw (n, d) array.
    """
    x = _as_inputs(params, batch)
    trace = ForwardTrace(params=params, inputs=x)
    a = x
    n_layers = len(params.weights)
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w + b
        trace.pre_activations.append(z)
        a = np.maximum(z, 0.0) if l < n_layers - 1 else z
        trace.activations.append(a)
    trace.logits = a
    trace.probs = np.exp(log_softmax(a))
    return trace.probs, trace


def predict(params, inputs):
    """Argmax class per row; ties go to the lowest class index."""
    probs, _ = forward(params, inputs)
    return np.argmax(probs, axis=1)


def loss(params, batch):
    _, trace = forward(params, batch)
    return _mean_ce(trace.logits, batch.labels)


def _mean_ce(logits, labels):
    logp = log_softmax(logits)
    return float(-logp[np.arange(labels.shape[0]), labels].mean())


def backward(params, trace, labels):
    """Exact gradients of the mean cross-entropy.

    Returns ``(param_grads, input_grads, loss)`` where ``param_grads`` is an
    ``MlpParams`` holding dL/dW and dL/db, and ``input_grads`` has the shape of
    the traced inputs.
    """
    if trace.params is not params:
        raise InvalidArgument("trace was produced by different parameters; rerun forward")
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    n = trace.inputs.shape[0]
    n_classes = trace.logits.shape[1]
    if labels.shape[0] != n:
        raise InvalidArgument(f"{labels.shape[0]} labels for a batch of {n}")
    if labels.min() < 0 or labels.max() >= n_classes:
        raise InvalidArgument(f"labels must lie in [0, {n_classes})")

    dz = trace.probs.copy()
    dz[np.arange(n), labels] -= 1.0
    dz /= n

    n_layers = len(params.weights)
    grad_w = [None] * n_layers
    grad_b = [None] * n_layers
    for l in range(n_layers - 1, -1, -1):
        a_prev = trace.activations[l - 1] if l else trace.inputs
        grad_w[l] = a_prev.T @ dz
        grad_b[l] = dz.sum(axis=0)
        da = dz @ params.weights[l].T
        if l:
            # ReLU subgradient at exactly 0 is taken as 0.
            dz = da * (trace.pre_activations[l - 1] > 0)
    input_grads = da
    return MlpParams(grad_w, grad_b), input_grads, _mean_ce(trace.logits, labels)


def sgd_step(params, param_grads, lr):
    """theta - lr * g, as new params."""
    if lr < 0:
        raise InvalidArgument(f"learning rate must be >= 0, got {lr!r}")
    if params.layer_dims != param_grads.layer_dims:
        raise InvalidArgument(f"gradient dims {param_grads.layer_dims} do not match params {params.layer_dims}")
    return MlpParams([w - lr * g for w, g in zip(params.weights, param_grads.weights)],
                     [b - lr * g for b, g in zip(params.biases, param_grads.biases)])


def evaluate_accuracy(params, batch):
    if len(batch) == 0:
        raise InvalidArgument("cannot evaluate accuracy on an empty batch")
    return float(np.mean(predict(params, batch.inputs) == batch.labels))


def save_checkpoint(params, path):
    """Write ``params`` as: magic, u32 version, u32 n_dims, u32 dims..., then
    little-endian float64 arrays W0, b0, W1, b1, ... in row-major order."""
    dims = params.layer_dims
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(dims)))
        fh.write(struct.pack(f"<{len(dims)}I", *dims))
        for arr in params.arrays():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path):
    data = Path(path).read_bytes()
    head = len(CHECKPOINT_MAGIC)
    if data[:head] != CHECKPOINT_MAGIC:
        raise DataFormatError(f"{path}: not a model checkpoint (magic {data[:head]!r})")
    if len(data) < head + 8:
        raise DataFormatError(f"{path}: truncated header")
    version, n_dims = struct.unpack_from("<II", data, head)
    if version != CHECKPOINT_VERSION:
        raise DataFormatError(f"{path}: unsupported checkpoint version {version}")
    pos = head + 8
    if len(data) < pos + 4 * n_dims:
        raise DataFormatError(f"{path}: truncated header")
    dims = struct.unpack_from(f"<{n_dims}I", data, pos)
    pos += 4 * n_dims
    n_values = sum(a * b + b for a, b in zip(dims[:-1], dims[1:]))
    if len(data) - pos != 8 * n_values:
        raise DataFormatError(f"{path}: expected {8 * n_values} payload bytes, found {len(data) - pos}")
    flat = np.frombuffer(data, dtype="<f8", offset=pos).astype(np.float64)
    check_finite(flat, f"checkpoint {path}")
    template = MlpParams([np.zeros((a, b)) for a, b in zip(dims[:-1], dims[1:])],
                         [np.zeros(b) for b in dims[1:]])
    return template.unflatten(flat)
