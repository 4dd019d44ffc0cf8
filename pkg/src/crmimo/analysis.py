"""Closed-form performance predictions for the drop-max-power selection chain.

The per-user power requirement is approximated by a Gamma law: the random
noise-plus-interference seen by a user is moment-matched to Gamma(kappa_p,
theta_p), and dividing by the expected beamforming gain scales it to the
power the user asks for. Sums of member powers are moment-matched again,
which yields the feasibility probability of any candidate set, a recursion
over drop events that reaches each subset, and from there the expected
number of scheduled users, the expected number of rate-satisfied users, and
the expected leakage at the primary receivers. Rate outage for a fixed set
is recovered by numerically inverting the characteristic function of the
interference balance.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate, special

from .allocation import budget
from .config import Geometry, NetworkConfig
from .errors import GuardError, NumericError

MODE_UPDATE = "update"
MODE_NOUPDATE = "noupdate"
_MODES = (MODE_UPDATE, MODE_NOUPDATE)

# The subset recursions are exponential in K.
_CHAIN_MAX_K = 10

_QUAD_EPSABS = 1e-10
_QUAD_EPSREL = 1e-6


@dataclass(frozen=True)
class GammaParams:
    """Shape/scale pair of a Gamma distribution."""

    shape: float
    scale: float

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @property
    def variance(self) -> float:
        return self.shape * self.scale**2


@dataclass(frozen=True)
class PowerFit:
    """Fitted law of one user's power requirement.

    The noise-plus-interference variable is Gamma(kappa, theta) and the
    power is gamma_mult times it. Without any primary transmitter that
    variable is the constant `point_mass` instead and the power is
    deterministic.
    """

    gamma_mult: float
    kappa: float | None = None
    theta: float | None = None
    point_mass: float | None = None

    @property
    def is_point_mass(self) -> bool:
        return self.point_mass is not None

    def power_params(self) -> GammaParams:
        if self.is_point_mass:
            raise ValueError("degenerate fit has no Gamma parameters")
        return GammaParams(self.kappa, self.gamma_mult * self.theta)

    def power_mean(self) -> float:
        if self.is_point_mass:
            return self.gamma_mult * self.point_mass
        return self.power_params().mean

    def power_second_moment(self) -> float:
        if self.is_point_mass:
            return self.power_mean() ** 2
        p = self.power_params()
        return p.scale**2 * p.shape * (p.shape + 1.0)

    def power_cdf(self, x: float) -> float:
        if self.is_point_mass:
            return 1.0 if x >= self.power_mean() else 0.0
        p = self.power_params()
        return float(special.gammainc(p.shape, max(x, 0.0) / p.scale))


def _nulled_dimension(config: NetworkConfig, set_size: int) -> int:
    free = config.M - set_size - config.L + 1
    if free < 1:
        raise ValueError(
            f"set of {set_size} users with L={config.L} leaves no beamforming "
            f"freedom at M={config.M}"
        )
    return free


def theorem1_params(
    k: int,
    set_size: int,
    config: NetworkConfig,
    geometry: Geometry,
    mode: str = MODE_UPDATE,
) -> PowerFit:
    """Gamma fit of user k's power requirement inside a set of given size.

    In `update` mode the beamforming gain corresponds to a design for the
    current set; in `noupdate` mode the full-candidate-set design is kept,
    whatever the current size.
    """
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}")
    design_size = set_size if mode == MODE_UPDATE else config.K
    eps1, eps2 = config.margins()
    beta_k = float(geometry.su_beta[k])
    rate = float(config.target_rates()[k])
    gain_mean = (beta_k + config.csi_error_su) * _nulled_dimension(config, design_size)
    gamma_mult = (2.0**rate - 1.0) / gain_mean
    base = config.sigma_w2 + eps2
    terms = config.Pp * geometry.pt_su_beta[:, k] if config.L else np.zeros(0)
    if terms.size == 0:
        return PowerFit(gamma_mult=gamma_mult, point_mass=base)
    mean = base + float(np.sum(terms))
    var = float(np.sum(terms**2))
    return PowerFit(gamma_mult=gamma_mult, kappa=mean**2 / var, theta=var / mean)


def corollary1_sum_params(params: Sequence[GammaParams]) -> GammaParams:
    """Moment-matched Gamma law of a sum of independent Gamma variables."""
    if len(params) == 0:
        raise ValueError("need at least one summand")
    ks = np.asarray([p.shape for p in params])
    ss = np.asarray([p.scale for p in params])
    num = float(np.sum(ks * ss))
    den = float(np.sum(ks * ss**2))
    return GammaParams(shape=num**2 / den, scale=den / num)


def prob_feasible(fits: Sequence[PowerFit], cap: float) -> float:
    """Probability that the summed member powers fit under the budget."""
    if len(fits) == 0:
        return 1.0
    if any(f.is_point_mass for f in fits):
        if not all(f.is_point_mass for f in fits):
            raise ValueError("mixed degenerate and Gamma members are not supported")
        total = sum(f.power_mean() for f in fits)
        return 1.0 if total <= cap else 0.0
    summed = corollary1_sum_params([f.power_params() for f in fits])
    return float(special.gammainc(summed.shape, cap / summed.scale))


def _checked_quad(func, a, b, **kwargs) -> float:
    if "weight" in kwargs:
        kwargs.setdefault("limlst", 200)
    else:
        kwargs.setdefault("limit", 400)
    out = integrate.quad(
        func, a, b, epsabs=_QUAD_EPSABS, epsrel=_QUAD_EPSREL, full_output=1, **kwargs
    )
    value, abserr = out[0], out[1]
    if len(out) > 3:
        raise NumericError(f"quadrature did not converge: {out[3]} (value {value:.3e})")
    # Loose safety net against silently bad estimates; quad normally does
    # far better than this or reports failure above.
    if abs(abserr) > max(1e-8, 1e-3 * abs(value)):
        raise NumericError(
            f"quadrature error estimate {abserr:.2e} too large for value {value:.3e}"
        )
    return float(value)


def prob_drop(
    fits: Sequence[PowerFit],
    j: int,
    cap: float,
    member_ids: Sequence[int] | None = None,
) -> float:
    """Probability that the budget is violated and member j asks the most.

    `fits` describes every member of the candidate set; `j` indexes into it.
    The two events are treated as independent, matching the recursion this
    feeds. For degenerate fits the argmax is deterministic with ties broken
    toward the largest user id, mirroring the greedy drop rule.
    """
    n = len(fits)
    if not 0 <= j < n:
        raise ValueError(f"member index {j} outside 0..{n - 1}")
    miss = 1.0 - prob_feasible(fits, cap)
    if miss == 0.0:
        return 0.0
    if n == 1:
        return miss
    if all(f.is_point_mass for f in fits):
        means = [f.power_mean() for f in fits]
        ids = list(member_ids) if member_ids is not None else list(range(n))
        top = max(means)
        drop_pos = max((i for i in range(n) if means[i] == top), key=lambda i: ids[i])
        return miss if drop_pos == j else 0.0

    pj = fits[j].power_params()
    others = [fits[i].power_params() for i in range(n) if i != j]

    def integrand(t: float) -> float:
        # t is the power of member j in units of its own scale.
        if t <= 0.0:
            return 0.0
        log_pdf = special.xlogy(pj.shape - 1.0, t) - t - special.gammaln(pj.shape)
        val = math.exp(log_pdf)
        x = t * pj.scale
        for p in others:
            val *= special.gammainc(p.shape, x / p.scale)
        return val

    win = _checked_quad(integrand, 0.0, np.inf)
    return miss * min(max(win, 0.0), 1.0)


# -- characteristic-function inversion ---------------------------------------

KIND_GAMMA = "gamma-power"
KIND_EXP = "unit-exponential-factor"


@dataclass(frozen=True)
class CfTerm:
    """One independent factor of the interference-balance variable.

    `theta` may be negative, which encodes a negated exponential variable.
    """

    kind: str
    theta: float
    kappa: float = 1.0

    @property
    def mean(self) -> float:
        return self.theta * (self.kappa if self.kind == KIND_GAMMA else 1.0)


def _cf_value(terms: Sequence[CfTerm], t: float) -> complex:
    val = complex(1.0, 0.0)
    for term in terms:
        z = 1.0 - 1j * term.theta * t
        if term.kind == KIND_GAMMA:
            val *= z ** (-term.kappa)
        else:
            val /= z
    return val


# Tail mass below this is unrepresentable next to 1.0 in double precision.
_LOG_TAIL_FLOOR = math.log(1e-17)


def _log_tail_bound(terms: Sequence[CfTerm], x: float) -> float:
    """Chernoff log-bound on P(Z > x); -inf when Z can never exceed x."""
    top = max((t.theta for t in terms if t.theta > 0.0), default=0.0)
    if top == 0.0:
        # Only negated terms remain, so Z <= 0 almost surely.
        return 0.0 if x < 0.0 else -math.inf
    best = 0.0
    for frac in (0.5, 0.9, 0.99):
        s = frac / top
        log_mgf = 0.0
        for term in terms:
            z = 1.0 - term.theta * s
            log_mgf -= (term.kappa if term.kind == KIND_GAMMA else 1.0) * math.log(z)
        best = min(best, log_mgf - s * x)
    return best


def gil_pelaez_cdf(terms: Sequence[CfTerm], x: float) -> float:
    """P(Z <= x) for Z a sum of independent Gamma-type terms.

    Uses the single-integral inversion F(x) = 1/2 - (1/pi) int_0^inf
    Im[phi(t) exp(-itx)]/t dt, split into a smooth segment near t = 0 and
    two Fourier tail integrals handled by oscillatory quadrature.
    """
    terms = [t for t in terms if t.theta != 0.0]
    if not terms:
        return 1.0 if x >= 0.0 else 0.0
    # Thresholds far outside the support would need O(x/theta) oscillation
    # cycles in the tail integrals while the CDF sits within 1e-17 of an
    # endpoint; settle those branches by Chernoff bound instead.
    if _log_tail_bound(terms, x) < _LOG_TAIL_FLOOR:
        return 1.0
    negated = [CfTerm(kind=t.kind, theta=-t.theta, kappa=t.kappa) for t in terms]
    if _log_tail_bound(negated, -x) < _LOG_TAIL_FLOOR:
        return 0.0
    mean = sum(t.mean for t in terms)
    theta_scale = max(abs(t.theta) for t in terms)
    t0 = 0.5 / max(abs(x), theta_scale)

    def smooth(t: float) -> float:
        if t == 0.0:
            return mean - x
        return float(np.imag(_cf_value(terms, t) * np.exp(-1j * t * x))) / t

    def tail_im(t: float) -> float:
        return float(np.imag(_cf_value(terms, t))) / t

    def tail_re(t: float) -> float:
        return float(np.real(_cf_value(terms, t))) / t

    head = _checked_quad(smooth, 0.0, t0)
    if x == 0.0:
        tail = _checked_quad(tail_im, t0, np.inf)
        total = head + tail
    else:
        w = abs(x)
        cos_part = _checked_quad(tail_im, t0, np.inf, weight="cos", wvar=w)
        sin_part = _checked_quad(tail_re, t0, np.inf, weight="sin", wvar=w)
        if x < 0.0:
            sin_part = -sin_part
        total = head + cos_part - sin_part
    return float(min(max(0.5 - total / math.pi, 0.0), 1.0))


def _rate_cf_terms(
    k: int,
    members: Sequence[int],
    y: float,
    config: NetworkConfig,
    geometry: Geometry,
    mode: str,
) -> tuple[list[CfTerm], float]:
    """CF terms and threshold for the rate-outage balance of user k in S."""
    eps1, eps2 = config.margins()
    sigma_d2 = config.csi_error_su
    beta_k = float(geometry.su_beta[k])
    rate = float(config.target_rates()[k])
    c_y = beta_k / (beta_k + sigma_d2) * (2.0**rate - 1.0) / (2.0**y - 1.0)
    zeta = c_y * (config.sigma_w2 + eps2) - config.sigma_w2

    terms: list[CfTerm] = []
    for l in range(config.L):
        theta = (1.0 - c_y) * config.Pp * float(geometry.pt_su_beta[l, k])
        if theta != 0.0:
            terms.append(CfTerm(kind=KIND_EXP, theta=theta))
    interferers = [j for j in members if j != k]
    if sigma_d2 > 0.0 and interferers:
        fits = [theorem1_params(j, len(members), config, geometry, mode) for j in interferers]
        means = np.asarray([sigma_d2 * f.power_mean() for f in fits])
        variances = np.asarray(
            [sigma_d2**2 * (2.0 * f.power_second_moment() - f.power_mean() ** 2) for f in fits]
        )
        total_var = float(np.sum(variances))
        total_mean = float(np.sum(means))
        if total_var > 0.0 and total_mean > 0.0:
            kappa_z = total_mean**2 / total_var
            terms.append(CfTerm(kind=KIND_GAMMA, theta=total_mean / kappa_z, kappa=kappa_z))
    return terms, zeta


def rate_ccdf(
    k: int,
    members: Sequence[int],
    y: float,
    config: NetworkConfig,
    geometry: Geometry,
    mode: str = MODE_UPDATE,
) -> float:
    """P(rate of user k inside set `members` >= y), under the fitted laws."""
    if y <= 0.0:
        raise ValueError("rate threshold must be positive")
    if k not in set(int(m) for m in members):
        raise ValueError(f"user {k} is not a member of {tuple(members)}")
    rate = float(config.target_rates()[k])
    if config.csi_error_su == 0.0 and y == rate:
        # Exact-inversion boundary: the allocated power hits the target with
        # certainty when the estimate is the true channel.
        return 1.0
    terms, zeta = _rate_cf_terms(k, members, y, config, geometry, mode)
    if not terms:
        return 1.0 if zeta >= 0.0 else 0.0
    if zeta < 0.0 and all(t.theta >= 0.0 for t in terms):
        return 0.0
    if zeta >= 0.0 and all(t.theta <= 0.0 for t in terms):
        return 1.0
    return gil_pelaez_cdf(terms, zeta)


def dominance_cdf_gap(
    k: int,
    set1: Sequence[int],
    set2: Sequence[int],
    x: float,
    config: NetworkConfig,
    geometry: Geometry,
) -> float:
    """CDF gap showing the power of user k shrinks when the set shrinks.

    Requires set2 to be a strict subset of set1 with k in both. Returns
    P(power in set2 <= x) - P(power in set1 <= x), which is nonnegative
    for every x because the smaller set frees beamforming dimensions.
    """
    s1, s2 = set(int(i) for i in set1), set(int(i) for i in set2)
    if not (s2 < s1):
        raise ValueError("set2 must be a strict subset of set1")
    if k not in s2:
        raise ValueError(f"user {k} must belong to both sets")
    f1 = theorem1_params(k, len(s1), config, geometry, MODE_UPDATE)
    f2 = theorem1_params(k, len(s2), config, geometry, MODE_UPDATE)
    return f2.power_cdf(x) - f1.power_cdf(x)


class SelectionChainAnalysis:
    """Memoised subset recursion for one geometry and mode.

    Walks every subset of the candidate set, weighting each by the
    probability the drop chain reaches it (treating per-step events as
    independent) times the probability it is feasible. Guarded to K <= 10
    because the recursion is exponential.
    """

    def __init__(self, config: NetworkConfig, geometry: Geometry, mode: str = MODE_UPDATE):
        if mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}")
        if config.K > _CHAIN_MAX_K:
            raise GuardError(
                f"subset recursion is limited to K <= {_CHAIN_MAX_K} users "
                f"(got K={config.K}); use the simulation harness at this size"
            )
        if config.R0_uniform is not None:
            raise ValueError("closed-form predictions need fixed target rates")
        self.config = config
        self.geometry = geometry
        self.mode = mode
        self.cap = budget(config)
        self._fit_cache: dict[tuple[int, int], PowerFit] = {}
        self._f_cache: dict[frozenset, float] = {}
        self._g_cache: dict[frozenset, float] = {}
        self._drop_cache: dict[tuple[frozenset, int], float] = {}
        self._ccdf_cache: dict[tuple[int, frozenset], float] = {}
        self._full = frozenset(range(config.K))

    def fit(self, k: int, set_size: int) -> PowerFit:
        key = (k, set_size if self.mode == MODE_UPDATE else self.config.K)
        if key not in self._fit_cache:
            self._fit_cache[key] = theorem1_params(
                k, set_size, self.config, self.geometry, self.mode
            )
        return self._fit_cache[key]

    def member_fits(self, members: Iterable[int]) -> list[PowerFit]:
        members = sorted(members)
        return [self.fit(k, len(members)) for k in members]

    def prob_feasible_set(self, members: Iterable[int]) -> float:
        key = frozenset(members)
        if key not in self._f_cache:
            self._f_cache[key] = prob_feasible(self.member_fits(key), self.cap)
        return self._f_cache[key]

    def prob_drop_from(self, members: Iterable[int], j: int) -> float:
        key = frozenset(members)
        if j not in key:
            raise ValueError(f"user {j} is not in {sorted(key)}")
        cache_key = (key, j)
        if cache_key not in self._drop_cache:
            ordered = sorted(key)
            self._drop_cache[cache_key] = prob_drop(
                self.member_fits(key), ordered.index(j), self.cap, member_ids=ordered
            )
        return self._drop_cache[cache_key]

    def reach_prob(self, members: Iterable[int]) -> float:
        """Probability the drop chain ever holds exactly this subset."""
        key = frozenset(members)
        if not key <= self._full:
            raise ValueError("subset contains unknown users")
        if key == self._full:
            return 1.0
        if key not in self._g_cache:
            total = 0.0
            for j in self._full - key:
                parent = key | {j}
                total += self.reach_prob(parent) * self.prob_drop_from(parent, j)
            self._g_cache[key] = total
        return self._g_cache[key]

    def _subsets(self) -> Iterable[tuple[int, ...]]:
        users = range(self.config.K)
        for size in range(1, self.config.K + 1):
            yield from itertools.combinations(users, size)

    def expected_selected(self) -> float:
        """Expected number of scheduled users E[K*]."""
        total = 0.0
        for subset in self._subsets():
            total += len(subset) * self.prob_feasible_set(subset) * self.reach_prob(subset)
        return total

    def member_rate_ccdf(self, k: int, members: Iterable[int]) -> float:
        key = (k, frozenset(members))
        if key not in self._ccdf_cache:
            rate = float(self.config.target_rates()[k])
            self._ccdf_cache[key] = rate_ccdf(
                k, sorted(key[1]), rate, self.config, self.geometry, self.mode
            )
        return self._ccdf_cache[key]

    def expected_satisfied(self) -> float:
        """Expected number of users that actually reach their target rate."""
        total = 0.0
        for subset in self._subsets():
            weight = self.prob_feasible_set(subset) * self.reach_prob(subset)
            # Unreachable or negligible branches cannot move the result and
            # each would cost several inversion integrals.
            if weight < 1e-12:
                continue
            total += weight * sum(self.member_rate_ccdf(k, subset) for k in subset)
        return total

    def expected_interference(self) -> float:
        """Expected leakage power at a primary receiver (same for all of them).

        Each scheduled watt leaks through the estimation error of the
        primary-receiver channel, whose per-component variance multiplies
        the expected member powers.
        """
        sigma_pr = self.config.csi_error_pr
        if sigma_pr == 0.0:
            return 0.0
        total = 0.0
        for subset in self._subsets():
            weight = self.prob_feasible_set(subset) * self.reach_prob(subset)
            if weight == 0.0:
                continue
            fits = self.member_fits(subset)
            total += weight * sigma_pr * sum(f.power_mean() for f in fits)
        return total


def expected_selected(config: NetworkConfig, geometry: Geometry, mode: str = MODE_UPDATE) -> float:
    return SelectionChainAnalysis(config, geometry, mode).expected_selected()


def expected_satisfied(config: NetworkConfig, geometry: Geometry, mode: str = MODE_UPDATE) -> float:
    return SelectionChainAnalysis(config, geometry, mode).expected_satisfied()


def expected_interference(
    config: NetworkConfig, geometry: Geometry, mode: str = MODE_UPDATE
) -> float:
    return SelectionChainAnalysis(config, geometry, mode).expected_interference()
