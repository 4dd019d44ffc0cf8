"""User selection algorithms and their evaluation on the true channels.

`dmp` greedily drops the most power-hungry user until the budget holds,
either redesigning beams after every drop or keeping the full-set design
frozen. `mdml` keeps the user set that maximises the estimated sum rate
under water-filling, dropping the weakest equivalent gain while that helps.
`exhaustive_optimal` and `sorted_prefix_optimal` are small-instance oracles
for the two problems the greedy algorithms approximate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .allocation import AllocationOutcome, budget, equivalent_gain, qos_power, waterfill
from .beamform import BeamSet, effective_gains, zf_vectors
from .channel import ChannelRealization, CsiView
from .config import NetworkConfig
from .errors import GuardError

# Enumerating every subset is limited to this many candidate users.
_EXHAUSTIVE_MAX_K = 14
# The sorted-prefix oracle is kept to the same small-instance regime.
_PREFIX_MAX_K = 20

# A user counts as served when its rate reaches the target up to this
# relative slack, so the exact-boundary case under perfect CSI does not
# flip on the last floating-point bit.
_RATE_SLACK = 1e-12


@dataclass
class SelectionOutcome:
    """Final scheduled set of one algorithm run."""

    algorithm: str
    members: tuple[int, ...]
    powers: np.ndarray          # aligned with members, watts
    beams: BeamSet | None       # None only when the set is empty
    iterations: int             # accepted drops
    dropped: tuple[int, ...]    # in drop order
    feasible: bool              # sum(powers) <= budget

    @property
    def total_power(self) -> float:
        return float(np.sum(self.powers)) if self.powers.size else 0.0


def _empty_outcome(algorithm: str, dropped: tuple[int, ...]) -> SelectionOutcome:
    return SelectionOutcome(
        algorithm=algorithm,
        members=(),
        powers=np.zeros(0),
        beams=None,
        iterations=len(dropped),
        dropped=dropped,
        feasible=True,
    )


def _design(
    csi: CsiView, config: NetworkConfig, members: tuple[int, ...], rates: np.ndarray | None
) -> tuple[BeamSet, AllocationOutcome]:
    beams = zf_vectors(csi, members)
    gains = effective_gains(beams, csi)
    alloc = qos_power(members, gains, csi.rev_interference, config, rates=rates)
    return beams, alloc


def _argmax_power(members: tuple[int, ...], powers: np.ndarray) -> int:
    # Ties drop the largest user index.
    best = np.max(powers)
    candidates = [members[i] for i in np.flatnonzero(powers == best)]
    return max(candidates)


def dmp(
    csi: CsiView,
    config: NetworkConfig,
    update_vectors: bool = True,
    rates: np.ndarray | None = None,
) -> SelectionOutcome:
    """Drop the maximum-power user until the budget is met.

    With `update_vectors` the beams and powers are redesigned for the
    surviving set after every drop; without it the full-set design stays
    frozen and survivors keep their original powers.
    """
    algorithm = "dmp" if update_vectors else "dmp_noupdate"
    members = tuple(range(config.K))
    beams, alloc = _design(csi, config, members, rates)
    dropped: list[int] = []
    while members:
        if alloc.total <= alloc.budget:
            return SelectionOutcome(
                algorithm=algorithm,
                members=members,
                powers=alloc.powers,
                beams=beams,
                iterations=len(dropped),
                dropped=tuple(dropped),
                feasible=True,
            )
        worst = _argmax_power(members, alloc.powers)
        dropped.append(worst)
        keep = tuple(k for k in members if k != worst)
        if not keep:
            break
        if update_vectors:
            beams, alloc = _design(csi, config, keep, rates)
        else:
            keep_idx = [members.index(k) for k in keep]
            beams = beams.restrict(keep)
            alloc = AllocationOutcome(
                members=keep,
                powers=alloc.powers[keep_idx],
                total=float(np.sum(alloc.powers[keep_idx])),
                budget=alloc.budget,
                feasible=bool(np.sum(alloc.powers[keep_idx]) <= alloc.budget),
            )
        members = keep
    return _empty_outcome(algorithm, tuple(dropped))


def _estimated_sum_rate(lambdas: np.ndarray, cap: float) -> tuple[float, np.ndarray]:
    powers, _ = waterfill(lambdas, cap)
    return float(np.sum(np.log2(1.0 + powers * lambdas))), powers


def _argmin_gain(members: tuple[int, ...], lambdas: np.ndarray) -> int:
    # Symmetric to the drop rule above: ties remove the largest user index.
    worst = np.min(lambdas)
    candidates = [members[i] for i in np.flatnonzero(lambdas == worst)]
    return max(candidates)


def mdml(csi: CsiView, config: NetworkConfig) -> SelectionOutcome:
    """Drop minimum-gain users while the water-filled sum rate improves.

    Members left with zero water-filling power stay in the returned set.
    """
    cap = budget(config)
    members = tuple(range(config.K))
    beams = zf_vectors(csi, members)
    lambdas = equivalent_gain(members, effective_gains(beams, csi), csi.rev_interference, config)
    rate, powers = _estimated_sum_rate(lambdas, cap)
    dropped: list[int] = []
    while len(members) > 1:
        worst = _argmin_gain(members, lambdas)
        keep = tuple(k for k in members if k != worst)
        new_beams = zf_vectors(csi, keep)
        new_lambdas = equivalent_gain(
            keep, effective_gains(new_beams, csi), csi.rev_interference, config
        )
        new_rate, new_powers = _estimated_sum_rate(new_lambdas, cap)
        if new_rate <= rate:
            break
        members, beams, lambdas, rate, powers = keep, new_beams, new_lambdas, new_rate, new_powers
        dropped.append(worst)
    # Water-filling spends exactly the budget; allow the last rounding bit.
    return SelectionOutcome(
        algorithm="mdml",
        members=members,
        powers=powers,
        beams=beams,
        iterations=len(dropped),
        dropped=tuple(dropped),
        feasible=bool(np.sum(powers) <= cap * (1.0 + 1e-9)),
    )


def exhaustive_optimal(
    csi: CsiView, config: NetworkConfig, rates: np.ndarray | None = None
) -> SelectionOutcome:
    """Largest feasible set under per-set redesigned powers, by enumeration.

    Scans cardinalities from K downward and returns the first feasible
    subset in lexicographic order. Guarded to K <= 14.
    """
    if config.K > _EXHAUSTIVE_MAX_K:
        raise GuardError(
            f"exhaustive search is limited to K <= {_EXHAUSTIVE_MAX_K} users "
            f"(got K={config.K}); use the greedy algorithms at this size"
        )
    users = range(config.K)
    for size in range(config.K, 0, -1):
        for combo in itertools.combinations(users, size):
            beams, alloc = _design(csi, config, combo, rates)
            if alloc.feasible:
                return SelectionOutcome(
                    algorithm="optimal",
                    members=combo,
                    powers=alloc.powers,
                    beams=beams,
                    iterations=0,
                    dropped=(),
                    feasible=True,
                )
    return _empty_outcome("optimal", ())


def sorted_prefix_optimal(
    csi: CsiView, config: NetworkConfig, rates: np.ndarray | None = None
) -> SelectionOutcome:
    """Largest feasible set under frozen full-set powers.

    With powers fixed at their full-set values the cheapest subset of any
    cardinality is the set of smallest powers, so the longest affordable
    sorted prefix is optimal. Guarded to K <= 20.
    """
    if config.K > _PREFIX_MAX_K:
        raise GuardError(
            f"the sorted-prefix oracle is limited to K <= {_PREFIX_MAX_K} users "
            f"(got K={config.K})"
        )
    members = tuple(range(config.K))
    beams, alloc = _design(csi, config, members, rates)
    order = np.argsort(alloc.powers, kind="stable")
    csum = np.cumsum(alloc.powers[order])
    n_keep = int(np.searchsorted(csum, alloc.budget, side="right"))
    if n_keep == 0:
        return _empty_outcome("sorted_prefix", ())
    keep = tuple(sorted(int(members[i]) for i in order[:n_keep]))
    keep_idx = [members.index(k) for k in keep]
    return SelectionOutcome(
        algorithm="sorted_prefix",
        members=keep,
        powers=alloc.powers[keep_idx],
        beams=beams.restrict(keep),
        iterations=0,
        dropped=(),
        feasible=True,
    )


@dataclass
class PerformanceReport:
    """Rates and interference realised by an outcome on the true channels."""

    members: tuple[int, ...]
    rates: np.ndarray            # aligned with members, bits/s/Hz
    satisfied_count: int         # members whose rate reaches their target
    pr_interference: np.ndarray  # (L,) watts at each primary receiver
    sum_power: float


def evaluate(
    channels: ChannelRealization,
    outcome: SelectionOutcome,
    rev_interference: np.ndarray,
    config: NetworkConfig,
    rates: np.ndarray | None = None,
) -> PerformanceReport:
    """Rates with actual cross-talk, and leakage at the primary receivers."""
    L = channels.h_pr.shape[0]
    targets = config.target_rates() if rates is None else np.asarray(rates, dtype=float)
    if not outcome.members:
        return PerformanceReport(
            members=(),
            rates=np.zeros(0),
            satisfied_count=0,
            pr_interference=np.zeros(L),
            sum_power=0.0,
        )
    members = list(outcome.members)
    V = outcome.beams.vectors                      # (n, M)
    P = outcome.powers
    # cross[i, j] = |h_i^H v_j|^2 on the true channels.
    cross = np.abs(channels.h_su[members].conj() @ V.T) ** 2
    signal = P * np.diagonal(cross)
    inter = cross @ P - signal
    denom = config.sigma_w2 + rev_interference[members] + inter
    achieved = np.log2(1.0 + signal / denom)
    satisfied = int(np.sum(achieved >= targets[members] * (1.0 - _RATE_SLACK)))
    if L:
        leak = np.abs(channels.h_pr.conj() @ V.T) ** 2  # (L, n)
        pr_inter = leak @ P
    else:
        pr_inter = np.zeros(0)
    return PerformanceReport(
        members=outcome.members,
        rates=achieved,
        satisfied_count=satisfied,
        pr_interference=pr_inter,
        sum_power=float(np.sum(P)),
    )
