"""Reactive comparators: throughput rule and buffer-occupancy rule."""
from __future__ import annotations

import math
from typing import Sequence

from ..twin import harmonic_mean


def rate_based_select(last_throughputs: Sequence[float], bitrates: Sequence[float], safety: float) -> int:
    """Highest rung within ``safety`` x harmonic mean of the last 3 measurements."""
    if not last_throughputs:
        raise ValueError("rate rule needs at least one throughput measurement")
    if not bitrates:
        raise ValueError("empty ladder")
    budget = safety * harmonic_mean(list(last_throughputs)[-3:])
    choice = 0
    for i, rate in enumerate(bitrates):
        if rate <= budget:
            choice = i
    return choice


def buffer_based_select(buffer: float, n_rungs: int, reservoir: float, cushion: float) -> int:
    if n_rungs < 1:
        raise ValueError("empty ladder")
    if buffer <= reservoir:
        return 0
    if buffer >= cushion:
        return n_rungs - 1
    pos = (buffer - reservoir) / (cushion - reservoir) * (n_rungs - 1)
    return min(int(math.floor(pos)), n_rungs - 1)
