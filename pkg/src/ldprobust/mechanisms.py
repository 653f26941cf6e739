"""Local randomizers: Laplace perturbation, randomized response, L1 clipping."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument


@dataclass(frozen=True)
class PrivacyBudget:
    """Per-release privacy budget epsilon. ``math.inf`` disables noise."""

    epsilon: float

    def __post_init__(self):
        eps = float(self.epsilon)
        if math.isnan(eps) or eps <= 0:
            raise InvalidArgument(f"epsilon must be positive or infinite, got {self.epsilon!r}")
        object.__setattr__(self, "epsilon", eps)

    @classmethod
    def infinite(cls):
        return cls(math.inf)

    @property
    def is_infinite(self):
        return math.isinf(self.epsilon)

    def __str__(self):
        return "inf" if self.is_infinite else repr(self.epsilon)


def as_budget(budget):
    return budget if isinstance(budget, PrivacyBudget) else PrivacyBudget(budget)


@dataclass(frozen=True)
class ClipSpec:
    """L1 clipping radius applied to a payload before Laplace noise."""

    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0 or math.isinf(self.radius):
            raise InvalidArgument(f"clip radius must be a positive finite number, got {self.radius!r}")


def laplace_noise(size, scale, rng):
    """Draw iid Laplace(0, scale) noise by inverting the CDF of a uniform draw."""
    u = rng.random(size)
    # rng.random() is [0, 1); ln(0) at the lower edge is the only singularity.
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    return np.where(u < 0.5, scale * np.log(2.0 * u), -scale * np.log(2.0 - 2.0 * u))


def laplace_perturb(v, sensitivity, budget, rng):
    """Return ``v`` plus Laplace noise with scale ``sensitivity / epsilon``.

    ``rng`` is a ``numpy.random.Generator`` owned by the caller; it is advanced
    by one uniform draw per coordinate. An infinite budget returns ``v`` as is.
    """
    if not sensitivity > 0:
        raise InvalidArgument(f"sensitivity must be positive, got {sensitivity!r}")
    budget = as_budget(budget)
    v = np.asarray(v, dtype=np.float64)
    if budget.is_infinite:
        return v.copy()
    return v + laplace_noise(v.shape, sensitivity / budget.epsilon, rng)


def randomized_response_matrix(k, budget):
    """k-ary randomized response kernel, returned as a ``DiscreteMechanism``.

    Keeps the true symbol with probability e^eps / (e^eps + k - 1) and moves to
    each other symbol with probability 1 / (e^eps + k - 1).
    """
    from .divergence import DiscreteMechanism

    if int(k) != k or k < 2:
        raise InvalidArgument(f"randomized response needs k >= 2, got {k!r}")
    k = int(k)
    budget = as_budget(budget)
    if budget.is_infinite:
        raise InvalidArgument("randomized response needs a finite budget")
    e = math.exp(budget.epsilon)
    keep = e / (e + k - 1)
    move = 1.0 / (e + k - 1)
    kernel = np.full((k, k), move)
    np.fill_diagonal(kernel, keep)
    return DiscreteMechanism(kernel)


def clip_l1(v, spec):
    """Scale ``v`` down so that its L1 norm does not exceed ``spec.radius``."""
    v = np.asarray(v, dtype=np.float64)
    norm = np.abs(v).sum()
    if norm <= spec.radius:
        return v.copy()
    return v * (spec.radius / norm)
