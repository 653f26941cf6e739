"""Simulated federated training with per-client local differential privacy.

Each round the server broadcasts the global parameters, every client runs
local SGD on its shard, optionally privatises its contribution, and the
server applies the sample-weighted mean of the client deltas (FedAvg).

Two LDP placements are supported:

``update_perturbation``
    each client L1-clips its parameter delta and adds Laplace(S / eps) noise.
``input_perturbation``
    each client adds Laplace(d / eps) noise to every input vector once, before
    training, and clamps back to [0, 1].
"""

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .mechanisms import ClipSpec, PrivacyBudget, as_budget, clip_l1, laplace_perturb
from .tensor_core import check_finite
from .model import LabeledBatch, backward, evaluate_accuracy, forward, init_params, loss, sgd_step

LDP_MODES = ("update_perturbation", "input_perturbation", "off")


@dataclass
class ClientShard:
    client_id: int
    data: LabeledBatch
    seed: int

    def __post_init__(self):
        if len(self.data) == 0:
            raise InvalidArgument(f"client {self.client_id} has an empty shard")

    def __len__(self):
        return len(self.data)


@dataclass
class RoundConfig:
    n_clients: int = 10
    local_epochs: int = 1
    batch_size: int = 32
    learning_rate: float = 0.05
    ldp_mode: str = "update_perturbation"
    budget: PrivacyBudget = field(default_factory=PrivacyBudget.infinite)
    clip: ClipSpec = field(default_factory=ClipSpec)
    rounds: int = 20

    def __post_init__(self):
        self.budget = as_budget(self.budget)
        if not isinstance(self.clip, ClipSpec):
            self.clip = ClipSpec(float(self.clip))
        if self.ldp_mode not in LDP_MODES:
            raise InvalidArgument(f"ldp_mode must be one of {LDP_MODES}, got {self.ldp_mode!r}")
        for name in ("n_clients", "batch_size", "rounds"):
            if getattr(self, name) < 1:
                raise InvalidArgument(f"{name} must be positive")
        if self.local_epochs < 0:
            raise InvalidArgument("local_epochs must be >= 0")
        if self.learning_rate < 0:
            raise InvalidArgument("learning_rate must be >= 0")


@dataclass
class ClientUpdate:
    delta: np.ndarray
    weight: float


@dataclass
class RoundLog:
    round: int
    global_loss: float
    global_accuracy: float
    epsilon: float
    mode: str
    seed: int
    noise_scale: float


def derive_seed(*words):
    """Deterministic 64-bit seed from a tuple of non-negative integers."""
    return int(np.random.SeedSequence([int(w) for w in words]).generate_state(1, np.uint64)[0])


def partition_iid(dataset, n_clients, seed):
    """Shuffle ``dataset`` and deal it into ``n_clients`` shards whose sizes differ by at most one."""
    n = len(dataset)
    if n_clients < 1 or n_clients > n:
        raise InvalidArgument(f"cannot split {n} samples across {n_clients} clients")
    perm = np.random.default_rng(seed).permutation(n)
    return [ClientShard(cid, dataset.subset(np.sort(idx)), derive_seed(seed, 1, cid))
            for cid, idx in enumerate(np.array_split(perm, n_clients))]


def local_train(shard, global_params, config, rng=None):
    """Run ``config.local_epochs`` of mini-batch SGD from ``global_params`` on ``shard``.

    Returns the flat parameter delta. ``rng`` drives batch shuffling; when not
    given a fresh generator is built from the shard's seed.
    """
    if shard.data.inputs.shape[1] != global_params.layer_dims[0]:
        raise InvalidArgument(f"shard width {shard.data.inputs.shape[1]} does not match the model "
                              f"input width {global_params.layer_dims[0]}")
    if rng is None:
        rng = np.random.default_rng(shard.seed)
    params = global_params
    n = len(shard)
    for _ in range(config.local_epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = shard.data.subset(order[start:start + config.batch_size])
            _, trace = forward(params, batch)
            grads, _, _ = backward(params, trace, batch.labels)
            params = sgd_step(params, grads, config.learning_rate)
    return ClientUpdate(delta=params.flatten() - global_params.flatten(), weight=float(n))


def privatize_update(update, clip, budget, rng):
    """Clip the delta to L1 radius S, then add Laplace(S / eps) noise per coordinate."""
    clipped = clip_l1(update.delta, clip)
    noisy = laplace_perturb(clipped, clip.radius, budget, rng)
    return ClientUpdate(delta=noisy, weight=update.weight)


def privatize_inputs(shard, budget, rng):
    """Perturb each input vector with Laplace(d / eps) noise and clamp to [0, 1].

    The L1 sensitivity of a vector in [0, 1]^d is d.
    """
    budget = as_budget(budget)
    if budget.is_infinite:
        return shard
    x = shard.data.inputs
    noisy = laplace_perturb(x, float(x.shape[1]), budget, rng)
    return ClientShard(shard.client_id, LabeledBatch(np.clip(noisy, 0.0, 1.0), shard.data.labels), shard.seed)


def fedavg(updates):
    """Sample-weighted mean of client deltas."""
    if not updates:
        raise InvalidArgument("fedavg needs at least one update")
    length = updates[0].delta.shape
    if any(u.delta.shape != length for u in updates):
        raise InvalidArgument("client deltas have different lengths")
    weights = np.array([u.weight for u in updates], dtype=np.float64)
    if np.any(weights < 0) or weights.sum() <= 0:
        raise InvalidArgument("client weights must be non-negative with a positive total")
    stacked = np.stack([u.delta for u in updates])
    return weights @ stacked / weights.sum()


def noise_scale(config, input_dim):
    """Laplace scale each client uses per coordinate under ``config``."""
    if config.ldp_mode == "off" or config.budget.is_infinite:
        return 0.0
    sens = config.clip.radius if config.ldp_mode == "update_perturbation" else float(input_dim)
    return sens / config.budget.epsilon


def run_training(dataset, config, master_seed, hidden_dims=(64,), n_classes=None,
                 init=None, eval_data=None, on_round=None, workers=1):
    """Simulate ``config.rounds`` of FedAvg and return ``(params, round_logs)``.

    ``dataset`` is a ``LabeledBatch`` (or anything with ``as_batch()``). Every
    random choice derives from ``master_seed``: the partition, the initial
    weights (unless ``init`` is given) and one generator per client, so the
    outcome does not depend on ``workers``. ``on_round(r, params)`` is called
    after each aggregation. The logged loss and accuracy are measured on
    ``eval_data`` (default: the training data).
    """
    data = dataset.as_batch() if hasattr(dataset, "as_batch") else dataset
    if n_classes is None:
        n_classes = getattr(dataset, "n_classes", None) or int(data.labels.max()) + 1
    params = init if init is not None else init_params(
        [data.inputs.shape[1], *hidden_dims, n_classes], derive_seed(master_seed, 0))
    eval_data = data if eval_data is None else (
        eval_data.as_batch() if hasattr(eval_data, "as_batch") else eval_data)

    shards = partition_iid(data, config.n_clients, derive_seed(master_seed, 1))
    rngs = {s.client_id: np.random.default_rng(s.seed) for s in shards}
    if config.ldp_mode == "input_perturbation":
        shards = [privatize_inputs(s, config.budget, rngs[s.client_id]) for s in shards]

    def client_step(shard, global_params):
        rng = rngs[shard.client_id]
        update = local_train(shard, global_params, config, rng)
        if config.ldp_mode == "update_perturbation":
            update = privatize_update(update, config.clip, config.budget, rng)
        return update

    scale = noise_scale(config, data.inputs.shape[1])
    logs = []
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for r in range(1, config.rounds + 1):
            if pool is None:
                updates = [client_step(s, params) for s in shards]
            else:
                updates = list(pool.map(lambda s, p=params: client_step(s, p), shards))
            params = params.unflatten(check_finite(params.flatten() + fedavg(updates),
                                                   f"global parameters after round {r}"))
            if on_round is not None:
                on_round(r, params)
            logs.append(RoundLog(round=r, global_loss=loss(params, eval_data),
                                 global_accuracy=evaluate_accuracy(params, eval_data),
                                 epsilon=config.budget.epsilon, mode=config.ldp_mode,
                                 seed=int(master_seed), noise_scale=scale))
    finally:
        if pool is not None:
            pool.shutdown()
    return params, logs


ROUND_LOG_COLUMNS = ("round", "global_loss", "global_accuracy", "epsilon", "mode", "seed")


def write_round_log(logs, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ROUND_LOG_COLUMNS)
        for log in logs:
            writer.writerow([log.round, repr(log.global_loss), repr(log.global_accuracy),
                             "inf" if math.isinf(log.epsilon) else repr(log.epsilon), log.mode, log.seed])
