"""Hockey-stick divergence on finite alphabets and the LDP / E_{e^eps} certificate.

Two independent routes decide whether a discrete mechanism is private:

* ``max_privacy_loss`` scans likelihood ratios K[x][v] / K[x'][v];
* ``e_robust_check`` scans hockey-stick divergences between output rows.

``ldp_robustness_equivalence`` runs both and reports whether they agree.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .mechanisms import as_budget

MASS_TOL = 1e-9
CERT_TOL = 1e-9
DIVERGENCE_TOL = 1e-12


def as_distribution(mass, name="distribution"):
    p = np.asarray(mass, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise InvalidArgument(f"{name} must be a non-empty vector")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise InvalidArgument(f"{name} has negative or non-finite mass")
    if abs(p.sum() - 1.0) > MASS_TOL:
        raise InvalidArgument(f"{name} sums to {p.sum()!r}, not 1")
    return p


@dataclass(frozen=True)
class DiscreteMechanism:
    """Row-stochastic kernel: row i is the output distribution on input i."""

    kernel: np.ndarray

    def __post_init__(self):
        k = np.array(self.kernel, dtype=np.float64)
        if k.ndim != 2 or k.shape[0] == 0 or k.shape[1] == 0:
            raise InvalidArgument(f"kernel must be a non-empty matrix, got shape {k.shape}")
        for i, row in enumerate(k):
            as_distribution(row, f"kernel row {i}")
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)

    @property
    def n_inputs(self):
        return self.kernel.shape[0]

    @property
    def n_outputs(self):
        return self.kernel.shape[1]

    def row(self, i):
        return self.kernel[i]

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n))


def hockey_stick(p, q, lam):
    """E_lam(p || q) = sum_v max(p(v) - lam * q(v), 0)."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise InvalidArgument(f"alphabet mismatch: {p.shape} vs {q.shape}")
    if lam < 1:
        raise InvalidArgument(f"lambda must be >= 1, got {lam!r}")
    return float(np.maximum(p - lam * q, 0.0).sum())


def total_variation(p, q):
    return 0.5 * float(np.abs(np.asarray(p, float) - np.asarray(q, float)).sum())


def _require_pairs(m):
    if m.n_inputs < 2:
        raise InvalidArgument("need at least two inputs to compare")


def max_privacy_loss(m):
    """Largest ln(K[x][v] / K[x'][v]) over input pairs and outputs.

    Outputs where both masses vanish are skipped; a positive mass against a
    zero mass gives ``math.inf``.
    """
    _require_pairs(m)
    k = m.kernel
    num = k[:, None, :]
    den = k[None, :, :]
    if np.any((num > 0) & (den == 0)):
        return math.inf
    both = (num > 0) & (den > 0)
    if not np.any(both):
        return 0.0
    with np.errstate(divide="ignore"):
        ratios = np.where(both, np.log(np.where(both, num, 1.0)) - np.log(np.where(both, den, 1.0)), -np.inf)
    return float(max(ratios.max(), 0.0))


def max_pairwise_hockey_stick(m, budget):
    """Largest E_{e^eps}(M(x) || M(x')) over all ordered input pairs."""
    _require_pairs(m)
    budget = as_budget(budget)
    if budget.is_infinite:
        raise InvalidArgument("hockey-stick certification needs a finite budget")
    lam = math.exp(budget.epsilon)
    worst = 0.0
    for i in range(m.n_inputs):
        for j in range(m.n_inputs):
            if i != j:
                worst = max(worst, hockey_stick(m.kernel[i], m.kernel[j], lam))
    return worst


def e_robust_check(m, budget):
    """True iff every ordered pair of input rows has zero E_{e^eps} divergence.

    The neighbourhood is unrestricted: all pairs of inputs are compared.
    """
    return max_pairwise_hockey_stick(m, budget) <= DIVERGENCE_TOL


@dataclass(frozen=True)
class EquivalenceRecord:
    ldp: bool
    e_robust: bool
    agree: bool
    epsilon: float
    max_privacy_loss: float

    def to_dict(self):
        return {
            "ldp": self.ldp,
            "e_robust": self.e_robust,
            "agree": self.agree,
            "epsilon": self.epsilon,
            "max_privacy_loss": self.max_privacy_loss,
        }


def ldp_robustness_equivalence(m, budget):
    """Decide eps-LDP by ratio scan and E_{e^eps}-robustness by divergence scan."""
    budget = as_budget(budget)
    loss = max_privacy_loss(m)
    ldp = loss <= budget.epsilon + CERT_TOL
    robust = e_robust_check(m, budget)
    return EquivalenceRecord(ldp=ldp, e_robust=robust, agree=ldp == robust,
                             epsilon=budget.epsilon, max_privacy_loss=loss)


def random_mechanism(rng, n_inputs, n_outputs):
    """Full-support kernel with rows of normalised iid uniform(0, 1) draws."""
    raw = rng.random((n_inputs, n_outputs))
    raw = np.where(raw == 0.0, np.nextafter(0.0, 1.0), raw)
    return DiscreteMechanism(raw / raw.sum(axis=1, keepdims=True))


FUZZ_BUDGETS = (0.1, 0.5, 1.0, 2.0)


def fuzz_equivalence(n_mechanisms=1000, seed=0, max_alphabet=6, budgets=FUZZ_BUDGETS):
    """Check LDP <=> E-robustness on random mechanisms.

    Each mechanism gets its own generator (seeded from ``seed`` and its index)
    and is checked at ``budgets`` plus its own max privacy loss. Returns the
    list of ``(index, mechanism, record)`` triples.
    """
    results = []
    for idx in range(n_mechanisms):
        rng = np.random.default_rng([seed, idx])
        nx, ny = rng.integers(2, max_alphabet + 1, size=2)
        m = random_mechanism(rng, int(nx), int(ny))
        loss = max_privacy_loss(m)
        for eps in (*budgets, loss):
            if eps <= 0:
                # Identical rows: zero loss is not a valid budget.
                eps = budgets[0]
            results.append((idx, m, ldp_robustness_equivalence(m, eps)))
    return results
