"""Simulated annealing over bitrate plans."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Sequence

Plan = tuple[int, ...]


@dataclass(frozen=True)
class AnnealingParams:
    iters: int = 2000
    t0: float = 1.0
    cooling: float = 0.995
    seed: int = 0

    def __post_init__(self):
        if self.iters < 0:
            raise ValueError("iters must be >= 0")
        if not self.t0 > 0:
            raise ValueError("t0 must be > 0")
        if not 0 < self.cooling < 1:
            raise ValueError("cooling must be in (0, 1)")


def sa_optimize(
    horizon: int,
    rung_count: int,
    feasible: Sequence[Sequence[int]],
    objective: Callable[[Plan], float],
    params: AnnealingParams = AnnealingParams(),
) -> Plan:
    """Maximise ``objective`` over plans with ``plan[k] in feasible[k]``.

    Starts from the lowest feasible rung in every slot; a move shifts one
    random slot to the neighbouring rung of its feasible set. Returns the best
    plan seen, so the result never scores below the starting plan.
    """
    if len(feasible) != horizon:
        raise ValueError(f"expected {horizon} feasible sets, got {len(feasible)}")
    sets = [sorted(set(s)) for s in feasible]
    for k, s in enumerate(sets):
        if not s:
            raise ValueError(f"slot {k} has an empty feasible set")
        if s[0] < 0 or s[-1] >= rung_count:
            raise ValueError(f"slot {k} has rungs outside [0, {rung_count})")
    rng = random.Random(params.seed)
    pos = [0] * horizon
    current = tuple(s[0] for s in sets)
    cur_val = objective(current)
    best, best_val = current, cur_val
    movable = [k for k, s in enumerate(sets) if len(s) > 1]
    temp = params.t0
    for _ in range(params.iters):
        if not movable:
            break
        k = movable[rng.randrange(len(movable))]
        if pos[k] == 0:
            step = 1
        elif pos[k] == len(sets[k]) - 1:
            step = -1
        else:
            step = rng.choice((-1, 1))
        cand_pos = pos[k] + step
        cand = current[:k] + (sets[k][cand_pos],) + current[k + 1:]
        cand_val = objective(cand)
        delta = cand_val - cur_val
        if delta >= 0 or rng.random() < math.exp(delta / temp):
            pos[k] = cand_pos
            current, cur_val = cand, cand_val
            if cur_val > best_val:
                best, best_val = current, cur_val
        temp *= params.cooling
    return best
