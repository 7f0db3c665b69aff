"""Source rate control and packet arrival sampling.

All randomness flows through a caller-owned ``numpy.random.Generator``
(PCG64).  Poisson counts come from ``Generator.poisson``, which is exact
and reproducible for a fixed seed and numpy version.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SourceParams:
    M: float = 1000.0
    beta: float = 1.0

    def __post_init__(self):
        if not self.M > 0:
            raise ValueError("M must be positive")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")


def make_rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def elastic_rate(shadow_backlog, utility, M, x_max):
    """Congestion-controlled injection rate ``min(U'^-1(Q/M), x_max)``.

    An empty ingress shadow queue maps to ``x_max``.
    """
    if shadow_backlog <= 0:
        return float(x_max)
    return min(utility.inverse_marginal(shadow_backlog / M), float(x_max))


def sample_poisson(rate, rng: np.random.Generator) -> int:
    if rate < 0:
        raise ValueError("Poisson mean must be nonnegative")
    if rate == 0:
        return 0
    return int(rng.poisson(rate))


def elastic_arrivals(rate, beta, rng: np.random.Generator):
    """Shadow ~ Poisson(rate); real is a Binomial(shadow, beta) thinning, so
    real ~ Poisson(beta * rate) and never exceeds shadow."""
    shadow = sample_poisson(rate, rng)
    real = int(rng.binomial(shadow, beta)) if shadow and beta < 1 else shadow
    return shadow, real


def inelastic_arrivals(lam, epsilon, rng: np.random.Generator):
    """Real ~ Poisson(lam); each real packet spawns one shadow packet plus an
    extra one with probability ``epsilon``."""
    real = sample_poisson(lam, rng)
    p = min(epsilon, 1.0)
    extra = int(rng.binomial(real, p)) if real and p > 0 else 0
    return real + extra, real
