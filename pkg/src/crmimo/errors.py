"""Exception types shared across the package."""

from __future__ import annotations

from typing import Sequence


class ConfigError(ValueError):
    """A configuration file or override is malformed or inconsistent."""


class GuardError(ValueError):
    """An operation was refused because an instance-size guard was exceeded."""


class RankDeficientError(RuntimeError):
    """The stacked channel matrix is numerically rank deficient.

    Carries the co-scheduled user set so callers can report which
    combination produced the singular geometry.
    """

    def __init__(self, message: str, members: Sequence[int]):
        super().__init__(message)
        self.members = tuple(members)


class ZeroGainError(RuntimeError):
    """A user has zero effective gain, so its target rate needs infinite power."""

    def __init__(self, message: str, user: int):
        super().__init__(message)
        self.user = user


class NumericError(RuntimeError):
    """A quadrature or inversion step failed to converge to tolerance."""
