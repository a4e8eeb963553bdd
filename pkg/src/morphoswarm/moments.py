"""Statistical moments of swarm point distributions.

Per axis we compute the population (1/n) mean, central variance, and the
standardized third and fourth moments (skewness, and non-excess kurtosis,
for which a normal distribution gives 3). Skewness and kurtosis are
undefined when the variance degenerates; they come back as NaN.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

DEGENERATE_VARIANCE = 1e-18

# channel order used everywhere a moment vector is flattened
CHANNELS = ("M1x", "M1y", "M2x", "M2y", "M3x", "M3y", "M4x", "M4y")


class Moments1D(NamedTuple):
    m1: float
    m2: float
    m3: float  # NaN when degenerate
    m4: float  # NaN when degenerate

    @property
    def degenerate(self) -> bool:
        return self.m2 < DEGENERATE_VARIANCE


def moments_1d(values: Sequence[float]) -> Moments1D:
    """First four moments of a 1-D sample, population-normalized.

    m3 = central third / m2^(3/2); m4 = central fourth / m2^2.
    Requires n >= 2; m3/m4 come back NaN when m2 < 1e-18.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("moments require a 1-D sample with n >= 2")
    m1 = float(x.mean())
    c = x - m1
    c2 = c * c
    m2 = float(c2.mean())
    if m2 < DEGENERATE_VARIANCE:
        return Moments1D(m1, m2, float("nan"), float("nan"))
    m3 = float((c2 * c).mean() / m2**1.5)
    m4 = float((c2 * c2).mean() / (m2 * m2))
    return Moments1D(m1, m2, m3, m4)


@dataclass(frozen=True)
class MomentVector:
    """The four moments of both coordinates of a swarm, in channel order."""

    m1x: float
    m1y: float
    m2x: float
    m2y: float
    m3x: float
    m3y: float
    m4x: float
    m4y: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.m1x, self.m1y, self.m2x, self.m2y, self.m3x, self.m3y, self.m4x, self.m4y]
        )

    @classmethod
    def from_array(cls, a) -> "MomentVector":
        return cls(*(float(v) for v in a))

    def axis(self, axis: str) -> Moments1D:
        if axis == "x":
            return Moments1D(self.m1x, self.m2x, self.m3x, self.m4x)
        if axis == "y":
            return Moments1D(self.m1y, self.m2y, self.m3y, self.m4y)
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")


def swarm_moments(positions: np.ndarray) -> MomentVector:
    """moments_1d applied independently to the x and y coordinates."""
    pos = np.asarray(positions, dtype=float)
    if pos.ndim != 2 or pos.shape[1] != 2:
        raise ValueError("positions must be an (n, 2) array")
    mx = moments_1d(pos[:, 0])
    my = moments_1d(pos[:, 1])
    return MomentVector(mx.m1, my.m1, mx.m2, my.m2, mx.m3, my.m3, mx.m4, my.m4)


def derivative_features(prev: MomentVector, curr: MomentVector, delta_steps: int) -> np.ndarray:
    """Per-channel slope (curr - prev) / delta over a record interval."""
    if delta_steps < 1:
        raise ValueError("delta_steps must be >= 1")
    return (curr.as_array() - prev.as_array()) / float(delta_steps)


def feature_vector(log, t: int) -> np.ndarray:
    """16-dim distribution descriptor: the 8 moments at step t followed by
    the 8 slopes from the preceding record interval.

    `log` is any object with a `records` list of (step, MomentVector).
    """
    steps = [s for s, _ in log.records]
    if t not in steps:
        raise ValueError(f"step {t} not recorded")
    idx = steps.index(t)
    if idx == 0:
        raise ValueError(f"step {t} is the first record; no predecessor for slopes")
    prev_step, prev = log.records[idx - 1]
    _, curr = log.records[idx]
    slopes = derivative_features(prev, curr, t - prev_step)
    return np.concatenate([curr.as_array(), slopes])
