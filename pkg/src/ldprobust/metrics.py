"""Robustness score psi = 1 / mean KL(f(x) || f(x_adv)) and run aggregation."""

import math
from dataclasses import dataclass

import numpy as np

from .adversarial import fgsm_batch
from .errors import InvalidArgument
from .model import forward
from .tensor_core import kl_rows

PSI_FLOOR = 1e-12

CSV_COLUMNS = ("epsilon", "seed", "alpha", "psi", "mean_kl", "clean_acc", "adv_acc")
# Aggregate rows carry the sample standard deviations in these extra columns.
STD_COLUMNS = ("psi_std", "mean_kl_std", "clean_acc_std", "adv_acc_std")


@dataclass(frozen=True)
class RobustnessReport:
    epsilon: float
    seed: int
    alpha: float
    psi: float
    mean_kl: float
    clean_accuracy: float
    adversarial_accuracy: float

    def csv_row(self):
        return [format_epsilon(self.epsilon), str(self.seed), repr(self.alpha), repr(self.psi),
                repr(self.mean_kl), repr(self.clean_accuracy), repr(self.adversarial_accuracy)]


def format_epsilon(eps):
    return "inf" if math.isinf(eps) else repr(float(eps))


def psi_from_kl(mean_kl):
    return 1.0 / max(mean_kl, PSI_FLOOR)


def psi_from_predictions(clean_probs, adv_probs):
    """Return ``(mean_kl, psi)`` for paired clean / adversarial predictions."""
    kl = kl_rows(clean_probs, adv_probs)
    mean_kl = float(kl.mean())
    return mean_kl, psi_from_kl(mean_kl)


def psi_robustness(params, test_batch, attack, epsilon=math.inf, seed=0):
    """Attack every test point with FGSM and score the prediction shift."""
    if len(test_batch) == 0:
        raise InvalidArgument("psi needs a non-empty test batch")
    x_adv = fgsm_batch(params, test_batch.inputs, test_batch.labels, attack)
    clean, _ = forward(params, test_batch.inputs)
    adv, _ = forward(params, x_adv)
    mean_kl, psi = psi_from_predictions(clean, adv)
    labels = test_batch.labels
    return RobustnessReport(
        epsilon=float(epsilon), seed=int(seed), alpha=float(attack.alpha), psi=psi, mean_kl=mean_kl,
        clean_accuracy=float(np.mean(np.argmax(clean, axis=1) == labels)),
        adversarial_accuracy=float(np.mean(np.argmax(adv, axis=1) == labels)),
    )


@dataclass(frozen=True)
class AggregateRow:
    epsilon: float
    alpha: float
    n_runs: int
    psi: float
    mean_kl: float
    clean_accuracy: float
    adversarial_accuracy: float
    psi_std: float
    mean_kl_std: float
    clean_accuracy_std: float
    adversarial_accuracy_std: float

    def csv_row(self):
        values = (self.psi, self.mean_kl, self.clean_accuracy, self.adversarial_accuracy,
                  self.psi_std, self.mean_kl_std, self.clean_accuracy_std, self.adversarial_accuracy_std)
        return [format_epsilon(self.epsilon), "mean", repr(self.alpha), *map(repr, values)]


def _mean_std(values):
    arr = np.sort(np.asarray(values, dtype=np.float64))
    # Sorting first makes the float sums independent of report order.
    std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return float(np.mean(arr)), std


def aggregate_runs(reports):
    """Mean and sample standard deviation per epsilon, groups sorted by epsilon."""
    if not reports:
        raise InvalidArgument("no reports to aggregate")
    groups = {}
    for rep in reports:
        groups.setdefault(rep.epsilon, []).append(rep)
    rows = []
    for eps in sorted(groups):
        group = groups[eps]
        alphas = {rep.alpha for rep in group}
        if len(alphas) != 1:
            raise InvalidArgument(f"epsilon {eps}: reports disagree on alpha {sorted(alphas)}")
        stats = [_mean_std([getattr(rep, name) for rep in group])
                 for name in ("psi", "mean_kl", "clean_accuracy", "adversarial_accuracy")]
        rows.append(AggregateRow(eps, alphas.pop(), len(group),
                                 *(m for m, _ in stats), *(s for _, s in stats)))
    return rows
