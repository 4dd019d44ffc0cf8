import numpy as np
import pytest

from crmimo.allocation import budget, equivalent_gain, qos_power, waterfill
from crmimo.config import NetworkConfig
from crmimo.errors import ZeroGainError


def _cfg(**kw):
    base = dict(M=16, K=4, L=1, P0=1.0, Pp=0.1, I0=1.0, sigma_w2=0.1,
                eps1=0.0, eps2=0.1, sigma_delta2=0.0, sigma_Delta2=0.0, R0=2.0)
    base.update(kw)
    return NetworkConfig(**base)


def test_budget_cases():
    # eps1 = 0 removes the interference bound
    assert budget(_cfg()) == pytest.approx(1.0)
    assert budget(_cfg(eps1=0.5, I0=0.3)) == pytest.approx(0.6)
    assert budget(_cfg(eps1=0.5, I0=10.0)) == pytest.approx(1.0)
    # derived margins at stock parameters
    cfg = NetworkConfig()
    assert budget(cfg) == pytest.approx(cfg.I0 / 1e-12)


def test_qos_power_hand_case():
    """P_k = (2^R - 1)(noise + interference + margin) / gain."""
    cfg = _cfg()
    members = (1, 3)
    gains = np.array([2.0, 4.0])
    rev = np.array([0.0, 0.5, 0.0, 0.2])
    out = qos_power(members, gains, rev, cfg)
    # user 1: 3 * (0.1 + 0.5 + 0.1) / 2 = 1.05 ; user 3: 3 * 0.4 / 4 = 0.3
    np.testing.assert_allclose(out.powers, [1.05, 0.3], rtol=1e-12)
    assert out.total == pytest.approx(1.35)
    assert out.budget == pytest.approx(1.0)
    assert not out.feasible
    assert out.members == (1, 3)


def test_qos_power_respects_per_user_rates():
    cfg = _cfg()
    rates = np.array([1.0, 1.0, 1.0, 3.0])
    out = qos_power((3,), np.array([1.0]), np.zeros(4), cfg, rates=rates)
    # (2^3 - 1) * (0.1 + 0.1) / 1
    np.testing.assert_allclose(out.powers, [1.4], rtol=1e-12)


def test_qos_power_zero_gain_names_user():
    cfg = _cfg()
    with pytest.raises(ZeroGainError) as exc:
        qos_power((0, 2), np.array([1.0, 0.0]), np.zeros(4), cfg)
    assert exc.value.user == 2


def test_equivalent_gain():
    cfg = _cfg()
    rev = np.array([0.0, 0.5, 0.0, 0.2])
    lam = equivalent_gain((1, 3), np.array([2.0, 4.0]), rev, cfg)
    np.testing.assert_allclose(lam, [2.0 / 0.7, 4.0 / 0.4], rtol=1e-12)


def test_waterfill_hand_case():
    """Second user sits exactly at the water level and gets nothing."""
    powers, mu = waterfill(np.array([1.0, 0.5]), 1.0)
    assert mu == pytest.approx(2.0)
    np.testing.assert_allclose(powers, [1.0, 0.0], atol=1e-12)


def test_waterfill_equal_gains_split_evenly():
    powers, mu = waterfill(np.full(4, 2.0), 1.0)
    np.testing.assert_allclose(powers, np.full(4, 0.25), rtol=1e-12)
    assert mu == pytest.approx(0.75)


def _waterfill_bisect(lam, cap):
    lo, hi = 0.0, cap + float(np.max(1.0 / lam))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.sum(np.maximum(mid - 1.0 / lam, 0.0)) > cap:
            hi = mid
        else:
            lo = mid
    return np.maximum(lo - 1.0 / lam, 0.0)


def test_waterfill_matches_bisection():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n = rng.integers(1, 9)
        lam = rng.uniform(0.05, 20.0, size=n)
        cap = rng.uniform(0.1, 10.0)
        powers, mu = waterfill(lam, cap)
        np.testing.assert_allclose(powers, _waterfill_bisect(lam, cap), atol=1e-9)
        assert np.sum(powers) == pytest.approx(cap, rel=1e-9)
        # active users reach the common level, inactive ones sit above it
        active = powers > 0
        np.testing.assert_allclose(powers[active] + 1.0 / lam[active], mu, rtol=1e-9)
        assert np.all(1.0 / lam[~active] >= mu - 1e-12)


def test_waterfill_rejects_degenerate_input():
    with pytest.raises(ValueError):
        waterfill(np.array([]), 1.0)
    with pytest.raises(ValueError):
        waterfill(np.array([1.0, -1.0]), 1.0)
    with pytest.raises(ValueError):
        waterfill(np.array([1.0]), 0.0)
