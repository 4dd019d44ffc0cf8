"""Per-user power computation and the shared downlink power budget.

Two allocation rules live here. `qos_power` inverts each member's target
rate using its effective gain and the noise-plus-interference it reports,
padded by the rate margin eps2. `waterfill` maximises the estimated sum rate
over the equivalent gains, spending the entire budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import NetworkConfig
from .errors import ZeroGainError


@dataclass
class AllocationOutcome:
    """Powers for one candidate set, plus the feasibility verdict."""

    members: tuple[int, ...]
    powers: np.ndarray       # aligned with members, watts
    total: float
    budget: float
    feasible: bool           # total <= budget


def budget(config: NetworkConfig) -> float:
    """Transmit power ceiling min(I0/eps1, P0); eps1 = 0 removes the
    interference bound and leaves the raw power limit."""
    eps1, _ = config.margins()
    if eps1 <= 0:
        return float(config.P0)
    return float(min(config.I0 / eps1, config.P0))


def qos_power(
    members: Sequence[int],
    gains: np.ndarray,
    rev_interference: np.ndarray,
    config: NetworkConfig,
    rates: np.ndarray | None = None,
) -> AllocationOutcome:
    """Exact power that meets each member's target rate with margin eps2.

    `gains` is aligned with `members`; `rev_interference` and the target
    rates are global length-K vectors indexed by user id.
    """
    members = tuple(int(k) for k in members)
    gains = np.asarray(gains, dtype=float)
    rates = config.target_rates() if rates is None else np.asarray(rates, dtype=float)
    _, eps2 = config.margins()
    bad = np.flatnonzero(gains <= 0)
    if bad.size:
        k = members[bad[0]]
        raise ZeroGainError(
            f"user {k} has zero effective gain; its target rate needs infinite power", k
        )
    idx = list(members)
    need = (2.0 ** rates[idx] - 1.0) * (config.sigma_w2 + rev_interference[idx] + eps2)
    powers = need / gains
    cap = budget(config)
    total = float(np.sum(powers))
    return AllocationOutcome(
        members=members,
        powers=powers,
        total=total,
        budget=cap,
        feasible=bool(total <= cap),
    )


def equivalent_gain(
    members: Sequence[int],
    gains: np.ndarray,
    rev_interference: np.ndarray,
    config: NetworkConfig,
) -> np.ndarray:
    """Gain-to-noise ratio lambda_k = gain_k / (sigma_w2 + I_k + eps2)."""
    members = list(int(k) for k in members)
    _, eps2 = config.margins()
    denom = config.sigma_w2 + np.asarray(rev_interference, dtype=float)[members] + eps2
    return np.asarray(gains, dtype=float) / denom


def waterfill(lambdas: np.ndarray, cap: float) -> tuple[np.ndarray, float]:
    """Sum-rate optimal powers over parallel channels with gains `lambdas`.

    Returns (powers, mu) with powers_k = max(mu - 1/lambda_k, 0) and the
    water level mu chosen so the active powers sum to `cap`. Users whose
    inverse gain reaches the water level get exactly zero.
    """
    lam = np.asarray(lambdas, dtype=float)
    if lam.size == 0:
        raise ValueError("waterfill needs at least one user")
    if np.any(lam <= 0) or cap <= 0:
        raise ValueError("waterfill needs positive gains and a positive budget")
    cost = 1.0 / lam
    order = np.argsort(cost, kind="stable")
    sorted_cost = cost[order]
    csum = np.cumsum(sorted_cost)
    mu = 0.0
    # Largest prefix of cheap users whose water level stays strictly above
    # the most expensive active user.
    for n in range(lam.size, 0, -1):
        level = (cap + csum[n - 1]) / n
        if level > sorted_cost[n - 1]:
            mu = level
            break
    powers = np.maximum(mu - cost, 0.0)
    return powers, float(mu)
