import numpy as np
import pytest

from crmimo.channel import (
    corrupt_csi,
    dump_channels_csv,
    geometry_rng,
    load_channels_csv,
    path_gain,
    reverse_interference,
    sample_channels,
    sample_geometry,
    trial_rng,
)
from crmimo.config import NetworkConfig


def test_substreams_are_reproducible_and_distinct():
    a = geometry_rng(3, 0).standard_normal(4)
    b = geometry_rng(3, 0).standard_normal(4)
    np.testing.assert_array_equal(a, b)
    c = geometry_rng(3, 1).standard_normal(4)
    d = geometry_rng(4, 0).standard_normal(4)
    assert not np.allclose(a, c)
    assert not np.allclose(a, d)
    # trial streams never collide with geometry streams
    e = trial_rng(3, 0, 0).standard_normal(4)
    assert not np.allclose(a, e)


def test_path_gain_formula():
    cfg = NetworkConfig(pathloss_exp=3.8, pathloss_ref_m=1.0, shadow_sigma_db=8.0)
    # no shadowing: pure distance law
    g = path_gain(np.array([1.0, 10.0, 100.0]), cfg, np.zeros(3))
    np.testing.assert_allclose(g, [1.0, 10.0**-3.8, 100.0**-3.8], rtol=1e-12)
    # +10 dB shadowing multiplies the gain by 10
    g10 = path_gain(np.array([10.0]), cfg, np.array([10.0]))
    assert g10[0] == pytest.approx(10.0 * 10.0**-3.8, rel=1e-12)
    # reference distance rescales
    cfg2 = cfg.with_overrides(pathloss_ref_m=10.0)
    g2 = path_gain(np.array([10.0]), cfg2, np.zeros(1))
    assert g2[0] == pytest.approx(1.0)


def test_geometry_respects_cell_and_keepout():
    cfg = NetworkConfig(M=64, K=30, L=4, cell_radius_m=500.0, min_distance_m=50.0)
    geo = sample_geometry(cfg, geometry_rng(0, 0))
    d_su = np.hypot(geo.su_xy[:, 0], geo.su_xy[:, 1])
    assert np.all(d_su >= 50.0)
    assert np.all(d_su <= 500.0)
    assert np.all(np.hypot(geo.pt_xy[:, 0], geo.pt_xy[:, 1]) <= 500.0)
    assert np.all(np.hypot(geo.pr_xy[:, 0], geo.pr_xy[:, 1]) <= 500.0)
    assert geo.su_beta.shape == (30,)
    assert geo.pt_su_beta.shape == (4, 30)
    assert geo.pr_beta.shape == (4,)
    assert np.all(geo.su_beta > 0)


def test_geometry_deterministic_per_substream():
    cfg = NetworkConfig(K=6, L=2)
    g1 = sample_geometry(cfg, geometry_rng(7, 3))
    g2 = sample_geometry(cfg, geometry_rng(7, 3))
    np.testing.assert_array_equal(g1.su_beta, g2.su_beta)
    np.testing.assert_array_equal(g1.pt_su_beta, g2.pt_su_beta)
    g3 = sample_geometry(cfg, geometry_rng(7, 4))
    assert not np.array_equal(g1.su_beta, g3.su_beta)


def test_channel_scaling_matches_slow_fading():
    """Per-entry second moment of h_k equals beta_k."""
    cfg = NetworkConfig(M=64, K=3, L=2)
    geo = sample_geometry(cfg, geometry_rng(1, 0))
    rng = trial_rng(1, 0, 0)
    acc = np.zeros(3)
    n = 400
    for _ in range(n):
        ch = sample_channels(geo, cfg, rng)
        acc += np.mean(np.abs(ch.h_su) ** 2, axis=1)
    emp = acc / n
    np.testing.assert_allclose(emp, geo.su_beta, rtol=0.05)


def test_reverse_interference_matches_direct_sum():
    cfg = NetworkConfig(M=16, K=5, L=3)
    geo = sample_geometry(cfg, geometry_rng(2, 0))
    ch = sample_channels(geo, cfg, trial_rng(2, 0, 0))
    want = np.zeros(5)
    for k in range(5):
        for l in range(3):
            want[k] += cfg.Pp * abs(ch.h_pt_su[l, k]) ** 2
    np.testing.assert_allclose(reverse_interference(ch, cfg.Pp), want, rtol=1e-12)


def test_reverse_interference_empty_without_primaries():
    cfg = NetworkConfig(M=16, K=4, L=0)
    geo = sample_geometry(cfg, geometry_rng(0, 0))
    ch = sample_channels(geo, cfg, trial_rng(0, 0, 0))
    np.testing.assert_array_equal(reverse_interference(ch, cfg.Pp), np.zeros(4))


def test_corrupt_csi_error_statistics():
    cfg = NetworkConfig(M=128, K=4, L=2, sigma_delta2=0.01, sigma_Delta2=0.04)
    geo = sample_geometry(cfg, geometry_rng(5, 0))
    rng = trial_rng(5, 0, 0)
    ch = sample_channels(geo, cfg, rng)
    err = np.zeros(4)
    n = 200
    for _ in range(n):
        csi = corrupt_csi(ch, cfg, rng)
        err += np.mean(np.abs(csi.hhat_su - ch.h_su) ** 2, axis=1)
    np.testing.assert_allclose(err / n, np.full(4, 0.01), rtol=0.1)
    csi = corrupt_csi(ch, cfg, rng)
    assert csi.sigma_delta2 == pytest.approx(0.01)
    assert csi.sigma_Delta2 == pytest.approx(0.04)
    np.testing.assert_allclose(csi.rev_interference, reverse_interference(ch, cfg.Pp))


def test_perfect_csi_passthrough():
    cfg = NetworkConfig(M=16, K=3, L=1, sigma_delta2=0.0, sigma_Delta2=0.0)
    geo = sample_geometry(cfg, geometry_rng(0, 0))
    ch = sample_channels(geo, cfg, trial_rng(0, 0, 0))
    csi = corrupt_csi(ch, cfg, trial_rng(0, 0, 1))
    np.testing.assert_array_equal(csi.hhat_su, ch.h_su)
    np.testing.assert_array_equal(csi.hhat_pr, ch.h_pr)


def test_channels_csv_round_trip(tmp_path):
    cfg = NetworkConfig(M=8, K=3, L=2)
    geo = sample_geometry(cfg, geometry_rng(11, 0))
    ch = sample_channels(geo, cfg, trial_rng(11, 0, 0))
    path = tmp_path / "ch.csv"
    dump_channels_csv(ch, path)
    back = load_channels_csv(path)
    np.testing.assert_allclose(back.h_su, ch.h_su, rtol=0, atol=0)
    np.testing.assert_allclose(back.h_pr, ch.h_pr, rtol=0, atol=0)
    np.testing.assert_allclose(back.h_pt_su, ch.h_pt_su, rtol=0, atol=0)
