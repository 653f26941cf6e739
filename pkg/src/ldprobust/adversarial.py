"""FGSM attacks, adversarial-example classification and oracle thresholds.

Classifiers and oracles here work on batches: a classifier is any callable
mapping an (n, d) array to n integer labels. The labelling oracle additionally
returns ``UNLABELABLE`` (-1 in batch form, ``None`` for a single point) where
no true label exists.
"""

import enum
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, InvalidArgument
from .model import backward, forward, predict

UNLABELABLE = -1
NEGATIVE = 0
POSITIVE = 1


@dataclass(frozen=True)
class AttackConfig:
    """L-infinity ball radius (also the FGSM step) and the input domain box."""

    alpha: float
    domain: tuple = (0.0, 1.0)

    def __post_init__(self):
        if not self.alpha >= 0:
            raise InvalidArgument(f"alpha must be >= 0, got {self.alpha!r}")


@dataclass(frozen=True)
class BandOracle:
    """Ground truth on [low, high]^2: positive right of the band, negative left,
    unlabelable inside |x_1| <= band."""

    band: float = 0.05
    low: float = -1.0
    high: float = 1.0
    axis: int = 0

    @property
    def domain(self):
        return (self.low, self.high)

    def labels(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        c = pts[:, self.axis]
        return np.where(c > self.band, POSITIVE, np.where(c < -self.band, NEGATIVE, UNLABELABLE))

    def __call__(self, x):
        label = int(self.labels(x)[0])
        return None if label == UNLABELABLE else label


@dataclass(frozen=True)
class ThresholdClassifier:
    """Predicts positive iff coordinate ``axis`` exceeds ``threshold``."""

    threshold: float = 0.0
    axis: int = 0

    def __call__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.where(pts[:, self.axis] > self.threshold, POSITIVE, NEGATIVE)


@dataclass(frozen=True)
class ConstantClassifier:
    label: int

    def __call__(self, points):
        return np.full(np.atleast_2d(points).shape[0], self.label)


def model_classifier(params, to_model=None):
    """Wrap an MLP as a batch classifier, mapping points through ``to_model`` first."""
    def classify(points):
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return predict(params, pts if to_model is None else to_model(pts))
    return classify


class Verdict(enum.Enum):
    SENSITIVITY = "sensitivity"
    INVARIANCE = "invariance"
    NOT_ADVERSARIAL = "not_adversarial"


@dataclass(frozen=True)
class AdversarialVerdict:
    kind: Verdict
    linf_distance: float


@dataclass(frozen=True)
class AlphaThresholds:
    """``alpha1`` is ``None`` when no grid point carries a different true label."""

    alpha1: float | None
    alpha2: float | None

    def to_dict(self):
        return {"alpha1": self.alpha1, "alpha2": self.alpha2}


def fgsm_step(x, grad, alpha, domain=(0.0, 1.0)):
    """clamp(x + alpha * sign(grad)); sign(0) is 0."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if x.shape != grad.shape:
        raise InvalidArgument(f"input {x.shape} and gradient {grad.shape} differ in shape")
    return np.clip(x + alpha * np.sign(grad), domain[0], domain[1])


def fgsm_batch(params, inputs, labels, config):
    """One FGSM step for every row of ``inputs`` against its label.

    The mean-loss gradient of row i is the per-example gradient divided by the
    batch size, so its sign is the per-example sign.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    if x.shape[1] != params.layer_dims[0]:
        raise InvalidArgument(f"model expects width {params.layer_dims[0]}, got {x.shape[1]}")
    if config.alpha == 0:
        return x.copy()
    _, trace = forward(params, x)
    _, grad_x, _ = backward(params, trace, labels)
    return fgsm_step(x, grad_x, config.alpha, config.domain)


def fgsm(params, x, y, config):
    """FGSM adversarial version of a single input vector ``x`` with label ``y``."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidArgument("fgsm takes a single input vector; use fgsm_batch for batches")
    return fgsm_batch(params, x[None, :], [y], config)[0]


def _single(classifier, x):
    return int(classifier(np.asarray(x, dtype=np.float64)[None, :])[0])


def classify_example(f, oracle, x, x_star, config):
    """Sort a candidate ``x_star`` into sensitivity / invariance / not adversarial.

    ``x`` must be correctly classified: f(x) == oracle(x) and oracle(x) is a
    real label.
    """
    x = np.asarray(x, dtype=np.float64)
    x_star = np.asarray(x_star, dtype=np.float64)
    if x.shape != x_star.shape:
        raise InvalidArgument("x and x_star differ in shape")
    y = oracle(x)
    fx = _single(f, x)
    if y is None or fx != y:
        raise InvalidArgument(f"x must be correctly classified (f(x)={fx}, oracle(x)={y})")
    dist = float(np.max(np.abs(x_star - x))) if x.size else 0.0
    if dist > config.alpha:
        return AdversarialVerdict(Verdict.NOT_ADVERSARIAL, dist)
    if _single(f, x_star) != fx:
        return AdversarialVerdict(Verdict.SENSITIVITY, dist)
    o_star = oracle(x_star)
    if o_star is not None and o_star != y:
        return AdversarialVerdict(Verdict.INVARIANCE, dist)
    return AdversarialVerdict(Verdict.NOT_ADVERSARIAL, dist)


def _grid_axis(lo, hi, step):
    n = int(np.floor((hi - lo) / step + 1e-9))
    # Rounding snaps values such as -1 + 105 * 0.01 onto the literal 0.05.
    return np.round(lo + step * np.arange(n + 1), 12)


def _domain_boxes(domain, dim):
    if np.ndim(domain) == 1:
        return [tuple(domain)] * dim
    boxes = [tuple(b) for b in domain]
    if len(boxes) != dim:
        raise InvalidArgument(f"domain has {len(boxes)} boxes for a {dim}-dimensional point")
    return boxes


def compute_alpha_thresholds(oracle, x, y, domain=None, grid_step=0.01):
    """Exhaustive grid search for the oracle-misalignment radii around ``x``.

    alpha1 is the smallest L-inf distance to a grid point whose true label is
    neither ``y`` nor unlabelable; alpha2 is the largest distance to a grid point
    whose true label is ``y`` or unlabelable.
    """
    if not grid_step > 0:
        raise InvalidArgument(f"grid_step must be positive, got {grid_step!r}")
    x = np.asarray(x, dtype=np.float64)
    if oracle(x) is None or oracle(x) != y:
        raise InvalidArgument(f"oracle(x) = {oracle(x)} does not match the label {y}")
    boxes = _domain_boxes(oracle.domain if domain is None else domain, x.size)
    axes = [_grid_axis(lo, hi, grid_step) for lo, hi in boxes]
    points = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, x.size)
    dist = np.max(np.abs(points - x), axis=1)
    labels = oracle.labels(points)
    same = (labels == y) | (labels == UNLABELABLE)
    alpha1 = float(dist[~same].min()) if np.any(~same) else None
    alpha2 = float(dist[same].max()) if np.any(same) else None
    return AlphaThresholds(alpha1, alpha2)


def pointwise_robustness_check(f, oracle, x, config, n_samples, seed, domain=None):
    """Sampled check that f agrees with the oracle on the L-inf ball around ``x``.

    Returns False as soon as a sampled labelable point is misclassified. A True
    result is evidence, not proof.
    """
    if n_samples <= 0:
        raise InvalidArgument("n_samples must be positive")
    x = np.asarray(x, dtype=np.float64)
    y = oracle(x)
    if y is None or _single(f, x) != y:
        raise InvalidArgument("x must be correctly classified by f")
    boxes = np.array(_domain_boxes(oracle.domain if domain is None else domain, x.size))
    lo = np.maximum(boxes[:, 0], x - config.alpha)
    hi = np.minimum(boxes[:, 1], x + config.alpha)
    rng = np.random.default_rng(seed)
    samples = lo + (hi - lo) * rng.random((n_samples, x.size))
    truth = oracle.labels(samples)
    labelable = truth != UNLABELABLE
    return not np.any(labelable & (f(samples) != truth))


ADV_MAGIC = b"LDPRADV\x00"
ADV_VERSION = 1


def save_adversarial_batch(inputs, labels, path):
    """Companion of the checkpoint format: magic, u32 version, u32 n, u32 d,
    float64 inputs (row-major), then int64 labels, all little-endian."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.shape[0] != inputs.shape[0]:
        raise InvalidArgument("one label per input row is required")
    with open(path, "wb") as fh:
        fh.write(ADV_MAGIC)
        fh.write(struct.pack("<III", ADV_VERSION, *inputs.shape))
        fh.write(np.ascontiguousarray(inputs, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(labels, dtype="<i8").tobytes())


def load_adversarial_batch(path):
    data = Path(path).read_bytes()
    head = len(ADV_MAGIC)
    if data[:head] != ADV_MAGIC or len(data) < head + 12:
        raise DataFormatError(f"{path}: not an adversarial batch file")
    version, n, d = struct.unpack_from("<III", data, head)
    if version != ADV_VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    pos = head + 12
    if len(data) - pos != 8 * n * d + 8 * n:
        raise DataFormatError(f"{path}: payload size does not match header ({n} x {d})")
    inputs = np.frombuffer(data, dtype="<f8", count=n * d, offset=pos).reshape(n, d).astype(np.float64)
    labels = np.frombuffer(data, dtype="<i8", count=n, offset=pos + 8 * n * d).astype(np.int64)
    return inputs, labels
