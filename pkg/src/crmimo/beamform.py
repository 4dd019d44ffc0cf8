"""Zero-forcing beam directions with nulls on co-scheduled users and primaries.

For a scheduled set S the stacked matrix G holds the estimated channels of
every member of S followed by the L primary-receiver channels. The beam for
the i-th member is the i-th column of G (G^H G)^-1, normalised to unit norm,
which nulls every other column of G exactly. The column is obtained from a
singular value decomposition of G rather than by forming the Gram matrix, so
conditioning is inspected directly on the singular values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import CsiView
from .errors import RankDeficientError

# Condition-number ceiling beyond which the set is treated as singular.
_COND_LIMIT = 1e12


@dataclass
class BeamSet:
    """Unit-norm beam rows for a scheduled set.

    `vectors[i]` serves `members[i]`. `null_count` records how many channels
    each vector was forced orthogonal to when it was designed; for frozen
    vectors reused on a subset this stays at the design-time value.
    """

    members: tuple[int, ...]
    vectors: np.ndarray       # (len(members), M) complex
    null_count: int

    def index_of(self, k: int) -> int:
        try:
            return self.members.index(k)
        except ValueError:
            raise ValueError(f"user {k} is not in the beam set {self.members}") from None

    def restrict(self, members: Sequence[int]) -> "BeamSet":
        """Keep the frozen design rows of a subset of members."""
        idx = [self.index_of(k) for k in members]
        return BeamSet(
            members=tuple(int(k) for k in members),
            vectors=self.vectors[idx],
            null_count=self.null_count,
        )


def zf_vectors(csi: CsiView, members: Sequence[int]) -> BeamSet:
    """Design one beam per member of the scheduled set.

    Requires at least one member and M >= len(members) + L. Raises
    RankDeficientError when the stacked matrix is numerically singular
    (condition estimate above 1e12).
    """
    members = tuple(int(k) for k in members)
    if len(members) == 0:
        raise ValueError("zf_vectors needs a nonempty scheduled set")
    n = len(members)
    M = csi.hhat_su.shape[1]
    L = csi.hhat_pr.shape[0]
    if M < n + L:
        raise ValueError(f"M={M} antennas cannot null {n} users plus {L} primaries")

    G = np.concatenate([csi.hhat_su[list(members)], csi.hhat_pr], axis=0).T  # (M, n+L)
    U, s, Vh = np.linalg.svd(G, full_matrices=False)
    if s[-1] <= 0 or s[0] / s[-1] > _COND_LIMIT:
        raise RankDeficientError(
            f"stacked channel matrix for set {members} is numerically singular "
            f"(condition estimate {np.inf if s[-1] <= 0 else s[0] / s[-1]:.3e})",
            members,
        )
    # Columns of G (G^H G)^-1 equal the columns of U diag(1/s) Vh.
    raw = (U / s) @ Vh
    beams = raw[:, :n].T
    beams = beams / np.linalg.norm(beams, axis=1, keepdims=True)
    return BeamSet(members=members, vectors=beams, null_count=n - 1 + L)


def effective_gain(beams: BeamSet, csi: CsiView, k: int) -> float:
    """|hhat_k^H v_k|^2 for a member of the beam set."""
    v = beams.vectors[beams.index_of(int(k))]
    return float(np.abs(np.vdot(csi.hhat_su[int(k)], v)) ** 2)


def effective_gains(beams: BeamSet, csi: CsiView) -> np.ndarray:
    """Effective gain of every member, aligned with `beams.members`."""
    return np.asarray([effective_gain(beams, csi, k) for k in beams.members])
