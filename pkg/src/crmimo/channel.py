"""Geometry, small-scale channel, and CSI sampling.

Sampling is split in two stages so many channel realisations can share one
drop of node positions: `sample_geometry` fixes positions and slow fading,
`sample_channels` draws Rayleigh fading on top of it. Every stage takes an
explicit numpy Generator; `geometry_rng` and `trial_rng` derive independent
substreams from (seed, location index[, channel index]) so trials are
reproducible regardless of execution order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import Geometry, NetworkConfig

_GEOMETRY_TAG = 1
_TRIAL_TAG = 2

# Rejection sampling of user positions gives up after this many draws.
_MAX_PLACEMENT_ATTEMPTS = 10**6


def geometry_rng(seed: int, location_index: int) -> np.random.Generator:
    """Substream used for one drop of node positions."""
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), _GEOMETRY_TAG, int(location_index)])
    )


def trial_rng(seed: int, location_index: int, channel_index: int) -> np.random.Generator:
    """Substream used for one channel realisation at a given drop."""
    return np.random.default_rng(
        np.random.SeedSequence(
            [int(seed), _TRIAL_TAG, int(location_index), int(channel_index)]
        )
    )


def path_gain(distance_m: np.ndarray, config: NetworkConfig, shadow_db: np.ndarray) -> np.ndarray:
    """Slow-fading gain rho * (d / ref)^-exp with log-normal shadowing in dB."""
    rho = 10.0 ** (np.asarray(shadow_db, dtype=float) / 10.0)
    d = np.asarray(distance_m, dtype=float) / config.pathloss_ref_m
    return rho * d ** (-config.pathloss_exp)


def _disc_points(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    r = radius * np.sqrt(rng.uniform(size=n))
    ang = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return np.column_stack([r * np.cos(ang), r * np.sin(ang)])


def _disc_points_min_distance(
    rng: np.random.Generator, n: int, radius: float, min_distance: float
) -> np.ndarray:
    """Uniform points on the disc, rejecting any inside the keep-out radius."""
    out = np.empty((n, 2))
    for i in range(n):
        for attempt in range(_MAX_PLACEMENT_ATTEMPTS):
            p = _disc_points(rng, 1, radius)[0]
            if np.hypot(p[0], p[1]) >= min_distance:
                out[i] = p
                break
        else:
            raise RuntimeError(
                f"could not place a user outside {min_distance} m "
                f"after {_MAX_PLACEMENT_ATTEMPTS} attempts"
            )
    return out


def sample_geometry(config: NetworkConfig, rng: np.random.Generator) -> Geometry:
    """Drop users, primary transmitters, and primary receivers on the cell disc.

    The base station sits at the origin. Only the base-station-to-user links
    honour the minimum-distance rule; primary nodes are placed unconstrained.
    Draw order is fixed (user positions, PT positions, PR positions, then
    shadowing per link group) so a given generator state maps to one drop.
    """
    K, L, R = config.K, config.L, config.cell_radius_m
    su_xy = _disc_points_min_distance(rng, K, R, config.min_distance_m)
    pt_xy = _disc_points(rng, L, R)
    pr_xy = _disc_points(rng, L, R)

    d_su = np.hypot(su_xy[:, 0], su_xy[:, 1])
    d_pt_su = np.linalg.norm(pt_xy[:, None, :] - su_xy[None, :, :], axis=2)  # (L, K)
    d_pr = np.hypot(pr_xy[:, 0], pr_xy[:, 1])

    su_beta = path_gain(d_su, config, rng.normal(0.0, config.shadow_sigma_db, size=K))
    pt_su_beta = path_gain(
        d_pt_su, config, rng.normal(0.0, config.shadow_sigma_db, size=(L, K))
    )
    pr_beta = path_gain(d_pr, config, rng.normal(0.0, config.shadow_sigma_db, size=L))
    return Geometry(
        su_beta=su_beta,
        pt_su_beta=pt_su_beta,
        pr_beta=pr_beta,
        su_xy=su_xy,
        pt_xy=pt_xy,
        pr_xy=pr_xy,
    )


def _cn_matrix(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Standard circularly-symmetric complex Gaussian entries (unit variance)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


@dataclass
class ChannelRealization:
    """True channels for one coherence interval.

    `h_su[k]` is the M-vector from the base station to user k, `h_pr[l]`
    the M-vector to primary receiver l, and `h_pt_su[l, k]` the scalar
    channel from primary transmitter l to user k.
    """

    h_su: np.ndarray     # (K, M) complex
    h_pr: np.ndarray     # (L, M) complex
    h_pt_su: np.ndarray  # (L, K) complex


def sample_channels(geometry: Geometry, config: NetworkConfig, rng: np.random.Generator) -> ChannelRealization:
    """Draw Rayleigh fading scaled by the slow-fading gains."""
    K, L, M = geometry.n_users, geometry.n_primary, config.M
    h_su = np.sqrt(geometry.su_beta)[:, None] * _cn_matrix(rng, (K, M))
    h_pr = np.sqrt(geometry.pr_beta)[:, None] * _cn_matrix(rng, (L, M))
    h_pt_su = np.sqrt(geometry.pt_su_beta) * _cn_matrix(rng, (L, K))
    return ChannelRealization(h_su=h_su, h_pr=h_pr, h_pt_su=h_pt_su)


@dataclass
class CsiView:
    """What the base station knows: noisy channel estimates plus side powers.

    `rev_interference[k]` is the true aggregate primary-transmitter power
    received at user k; the base station learns it through user reports, so
    it is computed from the true scalar channels, not the estimates.
    """

    hhat_su: np.ndarray        # (K, M) complex estimates of user channels
    hhat_pr: np.ndarray        # (L, M) complex estimates of primary-receiver channels
    sigma_delta2: float        # per-component error variance, user links
    sigma_Delta2: float        # per-component error variance, primary links
    rev_interference: np.ndarray  # (K,) watts


def reverse_interference(channels: ChannelRealization, Pp: float) -> np.ndarray:
    """Aggregate primary-transmitter power received by each user (watts)."""
    if channels.h_pt_su.size == 0:
        return np.zeros(channels.h_su.shape[0])
    return Pp * np.sum(np.abs(channels.h_pt_su) ** 2, axis=0)


def corrupt_csi(
    channels: ChannelRealization, config: NetworkConfig, rng: np.random.Generator
) -> CsiView:
    """Additive Gaussian estimation errors on every base-station channel."""
    s_su = config.csi_error_su
    s_pr = config.csi_error_pr
    err_su = np.sqrt(s_su) * _cn_matrix(rng, channels.h_su.shape) if s_su > 0 else 0.0
    err_pr = np.sqrt(s_pr) * _cn_matrix(rng, channels.h_pr.shape) if s_pr > 0 else 0.0
    return CsiView(
        hhat_su=channels.h_su + err_su,
        hhat_pr=channels.h_pr + err_pr,
        sigma_delta2=s_su,
        sigma_Delta2=s_pr,
        rev_interference=reverse_interference(channels, config.Pp),
    )


def dump_channels_csv(channels: ChannelRealization, path: str | Path) -> None:
    """Write a realisation as text: one row per vector, re/im interleaved."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for name, mat in (
            ("h_su", channels.h_su),
            ("h_pr", channels.h_pr),
            ("h_pt_su", channels.h_pt_su),
        ):
            for i, row in enumerate(np.atleast_2d(mat)):
                cells: list[str] = [name, str(i)]
                for z in np.atleast_1d(row):
                    cells.append(repr(float(np.real(z))))
                    cells.append(repr(float(np.imag(z))))
                writer.writerow(cells)


def load_channels_csv(path: str | Path) -> ChannelRealization:
    """Inverse of `dump_channels_csv`."""
    rows: dict[str, list[np.ndarray]] = {"h_su": [], "h_pr": [], "h_pt_su": []}
    with open(path, newline="") as fh:
        for cells in csv.reader(fh):
            name = cells[0]
            vals = np.asarray([float(c) for c in cells[2:]])
            rows[name].append(vals[0::2] + 1j * vals[1::2])
    h_su = np.vstack(rows["h_su"])
    h_pr = (
        np.vstack(rows["h_pr"]) if rows["h_pr"] else np.zeros((0, h_su.shape[1]), complex)
    )
    h_pt_su = (
        np.vstack(rows["h_pt_su"]) if rows["h_pt_su"] else np.zeros((0, h_su.shape[0]), complex)
    )
    return ChannelRealization(h_su=h_su, h_pr=h_pr, h_pt_su=h_pt_su)
