"""Dataset loaders (MNIST IDX, CIFAR-10 binary) and the synthetic band task."""

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..adversarial import BandOracle
from ..errors import DataFormatError, InvalidArgument
from ..model import LabeledBatch

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
CIFAR_RECORD = 1 + 3072


@dataclass
class Dataset:
    name: str
    inputs: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.inputs.ndim != 2 or self.inputs.shape[0] != self.labels.shape[0]:
            raise InvalidArgument(f"inputs {self.inputs.shape} and labels {self.labels.shape} do not pair up")
        if self.inputs.size and (self.inputs.min() < 0 or self.inputs.max() > 1):
            raise InvalidArgument("dataset features must lie in [0, 1]")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise InvalidArgument(f"labels must lie in [0, {self.n_classes})")

    def __len__(self):
        return self.labels.shape[0]

    @property
    def dim(self):
        return self.inputs.shape[1]

    def as_batch(self):
        return LabeledBatch(self.inputs, self.labels)

    def subset(self, idx, name=None):
        return Dataset(name or self.name, self.inputs[idx], self.labels[idx], self.n_classes)


def _read_bytes(path):
    data = Path(path).read_bytes()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return data


def read_idx(path, expected_magic):
    """Parse a big-endian IDX file into a uint8 array of its declared shape."""
    data = _read_bytes(path)
    if len(data) < 4:
        raise DataFormatError(f"{path}: file too short for an IDX header")
    (magic,) = struct.unpack_from(">I", data, 0)
    if magic != expected_magic:
        raise DataFormatError(f"{path}: bad IDX magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    n_dims = magic & 0xFF
    header = 4 + 4 * n_dims
    if len(data) < header:
        raise DataFormatError(f"{path}: truncated IDX header")
    dims = struct.unpack_from(f">{n_dims}I", data, 4)
    size = int(np.prod(dims))
    if len(data) - header != size:
        raise DataFormatError(f"{path}: header declares {size} bytes of payload, found {len(data) - header}")
    return np.frombuffer(data, dtype=np.uint8, offset=header).reshape(dims)


def load_mnist_idx(images_path, labels_path, name="mnist"):
    """Load an MNIST image/label IDX pair (optionally gzipped); pixels scaled to [0, 1]."""
    images = read_idx(images_path, IDX_IMAGE_MAGIC)
    labels = read_idx(labels_path, IDX_LABEL_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise DataFormatError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    if labels.size and labels.max() > 9:
        raise DataFormatError(f"{labels_path}: label {labels.max()} outside 0-9")
    flat = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return Dataset(name, flat, labels.astype(np.int64), 10)


def write_idx(array, path, magic, compress=None):
    arr = np.ascontiguousarray(array, dtype=np.uint8)
    payload = struct.pack(">I", magic) + struct.pack(f">{arr.ndim}I", *arr.shape) + arr.tobytes()
    if compress if compress is not None else str(path).endswith(".gz"):
        payload = gzip.compress(payload, mtime=0)
    Path(path).write_bytes(payload)


def write_mnist_idx(images, labels, images_path, labels_path):
    """Write uint8 images (n, 28, 28) and labels (n,) as an IDX pair."""
    write_idx(images, images_path, IDX_IMAGE_MAGIC)
    write_idx(labels, labels_path, IDX_LABEL_MAGIC)


def load_cifar10_bin(paths, name="cifar10"):
    """Load CIFAR-10 binary batches: records of 1 label byte + 3072 pixel bytes."""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    xs, ys = [], []
    for path in paths:
        data = _read_bytes(path)
        if len(data) == 0 or len(data) % CIFAR_RECORD:
            raise DataFormatError(f"{path}: size {len(data)} is not a multiple of {CIFAR_RECORD}")
        rec = np.frombuffer(data, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
        if rec[:, 0].max() > 9:
            raise DataFormatError(f"{path}: label byte {rec[:, 0].max()} outside 0-9")
        ys.append(rec[:, 0].astype(np.int64))
        xs.append(rec[:, 1:].astype(np.float64) / 255.0)
    return Dataset(name, np.concatenate(xs), np.concatenate(ys), 10)


def stratified_split(dataset, n_train, n_test, seed):
    """Disjoint train/test subsets whose class proportions follow the full set."""
    if n_train + n_test > len(dataset):
        raise InvalidArgument(f"asked for {n_train} + {n_test} samples from {len(dataset)}")
    rng = np.random.default_rng(seed)
    classes, counts = np.unique(dataset.labels, return_counts=True)

    def quota(total):
        exact = counts * total / counts.sum()
        base = np.floor(exact).astype(int)
        order = np.argsort(-(exact - base), kind="stable")
        base[order[: total - base.sum()]] += 1
        return base

    train_q, test_q = quota(n_train), quota(n_test)
    train_idx, test_idx = [], []
    for c, a, b in zip(classes, train_q, test_q):
        idx = rng.permutation(np.flatnonzero(dataset.labels == c))
        train_idx.append(idx[:a])
        test_idx.append(idx[a:a + b])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    return dataset.subset(train_idx, f"{dataset.name}-train"), dataset.subset(test_idx, f"{dataset.name}-test")


def to_unit_box(points, low=-1.0, high=1.0):
    return (np.asarray(points, dtype=np.float64) - low) / (high - low)


def from_unit_box(points, low=-1.0, high=1.0):
    return low + np.asarray(points, dtype=np.float64) * (high - low)


def make_synthetic_linear(n, seed, band=0.05):
    """Sample ``n`` labelable points on [-1, 1]^2 and label them with a band oracle.

    Returns ``(dataset, oracle)``. The dataset holds the points rescaled into
    [0, 1]^2; the oracle works in the original coordinates (see
    ``from_unit_box``).
    """
    if n < 2:
        raise InvalidArgument("need at least two samples")
    oracle = BandOracle(band=band)
    rng = np.random.default_rng(seed)
    points = np.empty((0, 2))
    while points.shape[0] < n:
        draw = rng.uniform(-1.0, 1.0, size=(2 * n, 2))
        points = np.concatenate([points, draw[np.abs(draw[:, 0]) > band]])
    points = points[:n]
    labels = oracle.labels(points)
    data = Dataset("synthetic-linear", np.clip(to_unit_box(points), 0.0, 1.0), labels, 2)
    return data, oracle
