"""Renyi differential privacy accounting and noise calibration.

The accountant ties together three facts about the Gaussian mechanism:

* releasing a query of L2-sensitivity ``delta_q`` with noise ``N(0, sigma^2 I)``
  is ``(alpha, alpha * delta_q^2 / (2 sigma^2))``-RDP for every order alpha > 1;
* RDP composes additively in beta at fixed alpha;
* ``(alpha, beta)``-RDP implies ``(beta + ln(1/delta)/(alpha - 1), delta)``-DP.

``calibrate_noise`` inverts that chain: given a target (epsilon, delta), a
budget split mu, T iterations, n samples and a per-sample gradient bound c,
it fixes ``alpha = ln(1/delta) / ((1 - mu) * epsilon) + 1`` and solves for

    sigma^2 = c^2 * alpha * T / (2 * n^2 * epsilon * mu)

so that the composed, converted guarantee lands exactly on epsilon.
``verify_budget`` replays the forward chain as an audit; round-tripping any
calibration must return the target epsilon (up to float round-off).

All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class PrivacyBudget:
    """Target (epsilon, delta)-DP plus the split parameter mu in (0, 1).

    mu is the fraction of epsilon assigned to the composed RDP mass; the
    remaining (1 - mu) * epsilon is spent by the RDP-to-DP conversion term.
    """

    epsilon: float
    delta: float
    mu: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"mu must lie in (0, 1), got {self.mu}")


@dataclass(frozen=True)
class RdpGuarantee:
    """An (alpha, beta) Renyi-DP guarantee: divergence of order alpha at most beta."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not self.alpha > 1.0:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")
        if not self.beta >= 0.0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian perturbation parameters: N(0, sigma^2 I_dim), query sensitivity.

    sigma = 0 is the degenerate noiseless spec (useful to collapse a private
    solver onto its non-private counterpart); the accounting operations demand
    sigma > 0.
    """

    sigma: float
    dim: int
    sensitivity: float

    def __post_init__(self):
        if not self.sigma >= 0.0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")
        if not self.sensitivity > 0.0:
            raise ValueError(f"sensitivity must be positive, got {self.sensitivity}")
        if self.dim < 0:
            raise ValueError(f"dim must be non-negative, got {self.dim}")


def classic_gaussian_sigma(sensitivity: float, epsilon: float, delta: float) -> float:
    """Smallest sigma of the classic Gaussian mechanism:
    ``sqrt(2 ln(1.25/delta)) * sensitivity / epsilon``."""
    if not sensitivity > 0:
        raise ValueError(f"sensitivity must be positive, got {sensitivity}")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return math.sqrt(2.0 * math.log(1.25 / delta)) * sensitivity / epsilon


def rdp_of_gaussian(spec: NoiseSpec, alpha: float) -> RdpGuarantee:
    """RDP curve of one Gaussian release: beta = alpha * sensitivity^2 / (2 sigma^2)."""
    if not alpha > 1.0:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    if not spec.sigma > 0.0:
        raise ValueError("rdp_of_gaussian: sigma must be positive")
    beta = alpha * spec.sensitivity**2 / (2.0 * spec.sigma**2)
    return RdpGuarantee(alpha=alpha, beta=beta)


def compose_rdp(
    guarantees: Sequence[RdpGuarantee], alpha: float | None = None
) -> RdpGuarantee:
    """Compose same-order guarantees by summing betas.

    ``alpha`` declares the order for an empty composition and, when given,
    must match the guarantees' shared order exactly.
    """
    if not guarantees:
        if alpha is None:
            raise ValueError("compose_rdp: empty composition needs an explicit alpha")
        return RdpGuarantee(alpha=alpha, beta=0.0)
    first = guarantees[0].alpha
    if alpha is not None and alpha != first:
        raise ValueError(f"compose_rdp: declared alpha {alpha} != guarantees' alpha {first}")
    for g in guarantees:
        if g.alpha != first:
            raise ValueError(
                f"compose_rdp: mixed orders {first} and {g.alpha}; "
                "heterogeneous composition is unsupported"
            )
    return RdpGuarantee(alpha=first, beta=sum(g.beta for g in guarantees))


def rdp_to_dp(guarantee: RdpGuarantee, delta: float) -> float:
    """Convert (alpha, beta)-RDP to (epsilon, delta)-DP:
    ``epsilon = beta + ln(1/delta) / (alpha - 1)``."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return guarantee.beta + math.log(1.0 / delta) / (guarantee.alpha - 1.0)


def budget_alpha(budget: PrivacyBudget) -> float:
    """The fixed RDP order ``alpha = ln(1/delta) / ((1 - mu) * epsilon) + 1``."""
    return math.log(1.0 / budget.delta) / ((1.0 - budget.mu) * budget.epsilon) + 1.0


def calibrate_noise(
    budget: PrivacyBudget,
    iterations: int,
    samples: int,
    clip: float,
    dim: int = 1,
) -> NoiseSpec:
    """Noise making T composed clipped-gradient releases (epsilon, delta)-DP.

    The per-iteration query is an averaged gradient whose per-sample norm is
    bounded by ``clip``, so its L2-sensitivity is ``clip / samples``.  Returns
    the spec with ``sigma = sqrt(clip^2 * alpha * T / (2 n^2 epsilon mu))``.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    if not clip > 0:
        raise ValueError(f"clip must be positive, got {clip}")
    alpha = budget_alpha(budget)
    variance = clip**2 * alpha * iterations / (2.0 * samples**2 * budget.epsilon * budget.mu)
    return NoiseSpec(sigma=math.sqrt(variance), dim=dim, sensitivity=clip / samples)


def verify_budget(
    spec: NoiseSpec,
    budget: PrivacyBudget,
    iterations: int,
    samples: int,
    clip: float,
) -> float:
    """Audit a calibration by replaying the forward accounting chain.

    Composes ``iterations`` Gaussian releases at sensitivity ``clip/samples``
    and order ``budget_alpha(budget)``, converts at ``budget.delta``, and
    returns the resulting epsilon.  For a spec produced by
    :func:`calibrate_noise` with the same arguments this is ``budget.epsilon``
    up to round-off.
    """
    alpha = budget_alpha(budget)
    step_spec = NoiseSpec(sigma=spec.sigma, dim=spec.dim, sensitivity=clip / samples)
    per_step = [rdp_of_gaussian(step_spec, alpha) for _ in range(iterations)]
    total = compose_rdp(per_step, alpha=alpha)
    return rdp_to_dp(total, budget.delta)


def sample_noise(spec: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw one N(0, sigma^2 I_dim) perturbation vector, advancing ``rng``."""
    return rng.normal(0.0, spec.sigma, spec.dim)
