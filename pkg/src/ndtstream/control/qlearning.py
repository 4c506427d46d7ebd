"""Tabular Q-learning over (buffer bin, throughput bin, last rung) states."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QParams:
    alpha: float = 0.1
    gamma: float = 0.9
    epsilon: float = 0.1
    buffer_bins: int = 6
    bw_bins: int = 6
    episodes: int = 30
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must be in [0, 1)")
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must be in [0, 1]")
        if self.buffer_bins < 2 or self.bw_bins < 2:
            raise ValueError("need at least 2 buffer and bandwidth bins")
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")


def _check_state(Q: np.ndarray, state: tuple[int, ...]) -> None:
    if len(state) != Q.ndim - 1:
        raise ValueError(f"state {state} has wrong arity for table of shape {Q.shape}")
    for idx, size in zip(state, Q.shape):
        if not 0 <= idx < size:
            raise IndexError(f"state {state} out of range for table of shape {Q.shape}")


def q_select(Q: np.ndarray, state: tuple[int, ...], epsilon: float, rng: random.Random) -> int:
    """Epsilon-greedy action; greedy ties go to the lowest action index."""
    _check_state(Q, state)
    n_actions = Q.shape[-1]
    if epsilon > 0 and rng.random() < epsilon:
        return rng.randrange(n_actions)
    return int(np.argmax(Q[state]))


def q_update(Q: np.ndarray, state, action: int, reward: float, next_state,
             alpha: float, gamma: float, terminal: bool = False) -> np.ndarray:
    _check_state(Q, state)
    if not 0 <= action < Q.shape[-1]:
        raise IndexError(f"action {action} out of range")
    future = 0.0
    if not terminal:
        _check_state(Q, next_state)
        future = float(Q[next_state].max())
    key = tuple(state) + (action,)
    Q[key] += alpha * (reward + gamma * future - Q[key])
    return Q


def buffer_bin(buffer: float, max_buffer: float, bins: int) -> int:
    return min(max(int(buffer / max_buffer * bins), 0), bins - 1)


def bandwidth_bin(throughput: float, lo: float, hi: float, bins: int) -> int:
    """Geometric bins over ``[lo, hi)``; values outside go to the end bins."""
    if throughput <= lo or hi <= lo:
        return 0
    pos = math.log(throughput / lo) / math.log(hi / lo)
    return min(int(pos * bins), bins - 1)
