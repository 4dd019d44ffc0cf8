"""Scenario configuration, unit conversions, and validation.

All internal computation uses linear watts. dBm appears only at the JSON and
CLI boundary: any power-valued key may be given with an `_dbm` suffix and is
converted on load.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import ConfigError

# Keys that hold linear powers and therefore accept an `_dbm` spelling.
_WATT_KEYS = (
    "P0",
    "Pp",
    "I0",
    "sigma_w2",
    "eps1",
    "eps2",
    "sigma_delta2",
    "sigma_Delta2",
)


def dbm_to_watts(x: float) -> float:
    """Convert a dBm value to linear watts."""
    return float(10.0 ** ((float(x) - 30.0) / 10.0))


def watts_to_dbm(x: float) -> float:
    """Convert linear watts to dBm. Requires x > 0."""
    if not x > 0:
        raise ValueError(f"watts_to_dbm needs a positive power, got {x!r}")
    return float(10.0 * math.log10(x) + 30.0)


@dataclass(eq=False)
class NetworkConfig:
    """Static description of one downlink scenario.

    Power-like quantities are linear watts. `R0` may be a scalar (broadcast
    to all K users) or a length-K sequence; it is normalised to an ndarray.
    When `R0_uniform` is set, per-trial targets are drawn uniformly from the
    half-open interval (low, high] instead of using `R0`.

    `eps1`, `eps2`, `sigma_delta2` and `sigma_Delta2` may be left as None,
    in which case they resolve to the channel-estimation defaults:
    sigma_delta2 = sigma_w2 / P0, sigma_Delta2 = sigma_w2 / Pp,
    eps1 = sigma_Delta2 and eps2 = P0 * sigma_delta2.
    """

    M: int = 64                      # transmit antennas at the small-cell base station
    K: int = 20                      # candidate secondary users
    L: int = 4                       # primary transmitter/receiver pairs
    P0: float = 10.0                 # maximum downlink transmit power budget (W)
    Pp: float = 0.1                  # per-primary-transmitter power (W)
    I0: float = dbm_to_watts(-106.0)  # tolerable interference per primary receiver (W)
    sigma_w2: float = 1e-13          # receiver noise power (W)
    R0: Any = 1.0                    # per-user target rates (bits/s/Hz)
    R0_uniform: Any = None           # optional (low, high] for per-trial rate draws
    eps1: float | None = None        # interference margin (power ratio)
    eps2: float | None = None        # rate margin added to noise-plus-interference (W)
    sigma_delta2: float | None = None  # CSI error variance, user links
    sigma_Delta2: float | None = None  # CSI error variance, primary-receiver links
    cell_radius_m: float = 2000.0
    min_distance_m: float = 100.0    # keep-out radius between base station and users
    pathloss_exp: float = 3.8
    pathloss_ref_m: float = 1.0      # reference distance in beta = rho * (d/ref)^-exp
    shadow_sigma_db: float = 8.0
    seed: int = 0

    def __post_init__(self) -> None:
        if np.isscalar(self.R0):
            self.R0 = np.full(int(self.K), float(self.R0))
        else:
            self.R0 = np.asarray(self.R0, dtype=float)
        if self.R0_uniform is not None:
            low, high = self.R0_uniform
            self.R0_uniform = (float(low), float(high))

    # -- resolved CSI error variances and margins -------------------------

    @property
    def csi_error_su(self) -> float:
        """Resolved per-component CSI error variance on user links."""
        if self.sigma_delta2 is not None:
            return float(self.sigma_delta2)
        if self.P0 <= 0:
            raise ConfigError("P0 must be positive to derive sigma_delta2")
        return self.sigma_w2 / self.P0

    @property
    def csi_error_pr(self) -> float:
        """Resolved per-component CSI error variance on primary-receiver links."""
        if self.sigma_Delta2 is not None:
            return float(self.sigma_Delta2)
        if self.Pp <= 0:
            raise ConfigError("Pp must be positive to derive sigma_Delta2")
        return self.sigma_w2 / self.Pp

    def margins(self) -> tuple[float, float]:
        """Resolved (eps1, eps2), falling back to `default_margins`."""
        d1, d2 = default_margins(self)
        e1 = d1 if self.eps1 is None else float(self.eps1)
        e2 = d2 if self.eps2 is None else float(self.eps2)
        return e1, e2

    def target_rates(self) -> np.ndarray:
        """Length-K vector of fixed target rates."""
        return np.asarray(self.R0, dtype=float)

    def with_overrides(self, **kwargs: Any) -> "NetworkConfig":
        return replace(self, **kwargs)

    # -- serialisation -----------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, np.ndarray):
                v = v.tolist()
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = v
        return out

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def default_margins(config: NetworkConfig) -> tuple[float, float]:
    """Margins matched to the CSI error statistics.

    eps1 equals the primary-link error variance and eps2 equals the worst
    case expected leakage P0 * sigma_delta2. With perfect CSI both are zero.
    """
    if config.P0 <= 0 or config.Pp <= 0:
        raise ConfigError("default margins need strictly positive P0 and Pp")
    return config.csi_error_pr, config.P0 * config.csi_error_su


def validate(config: NetworkConfig) -> list[str]:
    """Return a list of human-readable violations; empty means valid."""
    errs: list[str] = []
    if config.M < 1:
        errs.append("M must be at least 1")
    if config.K < 1:
        errs.append("K must be at least 1")
    if config.L < 0:
        errs.append("L must be nonnegative")
    if config.M < config.K + config.L:
        errs.append(
            f"M={config.M} must be at least K+L={config.K + config.L} "
            "so zero-forcing directions exist for the full candidate set"
        )
    for name in ("P0", "Pp", "I0", "sigma_w2"):
        if not getattr(config, name) > 0:
            errs.append(f"{name} must be strictly positive")
    for name in ("eps1", "eps2", "sigma_delta2", "sigma_Delta2"):
        v = getattr(config, name)
        if v is not None and v < 0:
            errs.append(f"{name} must be nonnegative when given")
    rates = np.asarray(config.R0, dtype=float)
    if rates.shape != (config.K,):
        errs.append(f"R0 must broadcast to length K={config.K}, got shape {rates.shape}")
    elif not np.all(rates > 0):
        errs.append("all target rates must be strictly positive")
    if config.R0_uniform is not None:
        low, high = config.R0_uniform
        if not (0 <= low < high):
            errs.append("R0_uniform must satisfy 0 <= low < high")
    if not 0 < config.min_distance_m < config.cell_radius_m:
        errs.append("need 0 < min_distance_m < cell_radius_m")
    if config.pathloss_exp <= 0 or config.pathloss_ref_m <= 0:
        errs.append("pathloss exponent and reference distance must be positive")
    if config.shadow_sigma_db < 0:
        errs.append("shadow_sigma_db must be nonnegative")
    if int(config.seed) < 0:
        errs.append("seed must be nonnegative")
    return errs


def _convert_flat_keys(raw: dict[str, Any]) -> dict[str, Any]:
    """Translate `_dbm` spellings into linear watts."""
    out: dict[str, Any] = {}
    for key, value in raw.items():
        if key.endswith("_dbm"):
            base = key[: -len("_dbm")]
            if base not in _WATT_KEYS:
                raise ConfigError(f"key {key!r} has a _dbm suffix but {base!r} is not a power")
            if base in out:
                raise ConfigError(f"both {base!r} and {key!r} were given")
            out[base] = dbm_to_watts(value)
        else:
            if key in out:
                raise ConfigError(f"both {key!r} and {key + '_dbm'!r} were given")
            out[key] = value
    return out


def from_dict(raw: dict[str, Any]) -> NetworkConfig:
    """Build a config from a flat dict, accepting `_dbm` power spellings."""
    known = {f.name for f in fields(NetworkConfig)}
    converted = _convert_flat_keys(dict(raw))
    unknown = sorted(set(converted) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    try:
        return NetworkConfig(**converted)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> NetworkConfig:
    """Load a JSON config file with flat keys matching NetworkConfig fields."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    # Accept a full run echo as well, which nests the config under "config".
    if "config" in raw and isinstance(raw["config"], dict):
        raw = raw["config"]
    return from_dict(raw)


def parse_override(text: str) -> tuple[str, Any]:
    """Parse one KEY=VALUE override; VALUE is JSON when possible."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form KEY=VALUE")
    key, value = text.split("=", 1)
    key = key.strip()
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value.strip()
    return key, parsed


def apply_overrides(config: NetworkConfig, pairs: Sequence[str]) -> NetworkConfig:
    """Apply repeatable KEY=VALUE overrides on top of a loaded config."""
    raw = config.to_dict()
    for text in pairs:
        key, value = parse_override(text)
        base = key[: -len("_dbm")] if key.endswith("_dbm") else key
        raw.pop(base, None)
        raw[key] = value
    return from_dict(raw)


@dataclass
class Geometry:
    """Node placement and slow-fading gains for one drop of the network.

    Betas are linear path gains (shadowing times distance loss): `su_beta`
    between the base station and each user, `pt_su_beta[l, k]` between
    primary transmitter l and user k, `pr_beta` between the base station
    and each primary receiver.
    """

    su_beta: np.ndarray           # (K,)
    pt_su_beta: np.ndarray        # (L, K)
    pr_beta: np.ndarray           # (L,)
    su_xy: np.ndarray = field(default=None)   # (K, 2) positions, base station at origin
    pt_xy: np.ndarray = field(default=None)   # (L, 2)
    pr_xy: np.ndarray = field(default=None)   # (L, 2)

    def __post_init__(self) -> None:
        self.su_beta = np.asarray(self.su_beta, dtype=float)
        self.pt_su_beta = np.asarray(self.pt_su_beta, dtype=float).reshape(-1, self.su_beta.size)
        self.pr_beta = np.asarray(self.pr_beta, dtype=float)

    @property
    def n_users(self) -> int:
        return self.su_beta.size

    @property
    def n_primary(self) -> int:
        return self.pr_beta.size
