"""QoE scoring over the four session KPIs (quality, startup, rebuffering, smoothness)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class SessionMetrics:
    r_util: float  # mean chunk utility
    d: float  # startup delay, s
    b: float  # total rebuffering, s
    s: float  # mean |utility change| between consecutive chunks

    def __post_init__(self):
        if not 0.0 <= self.r_util <= 1.0:
            raise ValueError(f"r_util must be in [0, 1], got {self.r_util}")
        if self.d < 0 or self.b < 0:
            raise ValueError("startup delay and rebuffering must be >= 0")
        if not 0.0 <= self.s <= 1.0:
            raise ValueError(f"smoothness must be in [0, 1], got {self.s}")


@dataclass(frozen=True)
class QoeWeights:
    w_r: float = 1.0
    w_d: float = 0.2
    w_b: float = 0.6
    w_s: float = 0.2
    d_ref: float = 10.0
    b_ref: float = 10.0

    def __post_init__(self):
        if min(self.w_r, self.w_d, self.w_b, self.w_s) < 0:
            raise ValueError("QoE weights must be non-negative")
        if self.d_ref <= 0 or self.b_ref <= 0:
            raise ValueError("d_ref and b_ref must be > 0")

    def scaled(self, factor: float) -> "QoeWeights":
        return QoeWeights(
            self.w_r * factor, self.w_d * factor, self.w_b * factor, self.w_s * factor,
            self.d_ref, self.b_ref,
        )


def chunk_utility(bitrate: float, ladder) -> float:
    """Log utility of a rung: 0 at the lowest bitrate, 1 at the highest.

    ``ladder`` is a :class:`~ndtstream.media.BitrateLadder` or a plain
    sequence of bitrates.
    """
    rates = ladder.bitrates if hasattr(ladder, "bitrates") else tuple(ladder)
    if not rates:
        raise ValueError("ladder has no rungs")
    if bitrate not in rates:
        raise ValueError(f"bitrate {bitrate} is not a ladder rung")
    r_min, r_max = min(rates), max(rates)
    if r_min == r_max:
        return 1.0
    return math.log(bitrate / r_min) / math.log(r_max / r_min)


def smoothness(chunk_utilities: Sequence[float]) -> float:
    u = list(chunk_utilities)
    if not u:
        raise ValueError("smoothness of an empty utility list")
    if len(u) == 1:
        return 0.0
    return sum(abs(b - a) for a, b in zip(u, u[1:])) / (len(u) - 1)


def qoe_score(m: SessionMetrics, w: QoeWeights = QoeWeights()) -> float:
    raw = (
        w.w_r * m.r_util
        - w.w_d * min(m.d / w.d_ref, 1.0)
        - w.w_b * min(m.b / w.b_ref, 1.0)
        - w.w_s * m.s
    )
    return 100.0 * min(max(raw, 0.0), 1.0)
