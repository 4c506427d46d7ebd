"""Twin-driven lookahead control.

``plan_objective`` is the twin's what-if simulator: it replays a candidate
plan of H chunks against the forecast with the session's buffer dynamics
and scores it. ``mpc_select`` enforces the predicted-bandwidth constraint
per slot, searches the feasible plans and applies the first action.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .. import kernels
from ..media import BitrateLadder, DeviceProfile, SessionConfig
from ..qoe import QoeWeights
from ..twin import Forecast
from .annealing import AnnealingParams, sa_optimize

EXHAUSTIVE_LIMIT = 100_000


@dataclass(frozen=True)
class Exhaustive:
    pass


@dataclass(frozen=True)
class Annealing:
    params: AnnealingParams = AnnealingParams()


@dataclass(frozen=True)
class PlanState:
    """Client state the what-if starts from.

    ``playing=False`` means the viewer is waiting (startup or a stall); the
    what-if then charges the wait as stall time until ``threshold`` seconds
    are buffered. ``threshold``/``resume_threshold`` default to the
    session config values.
    """

    buffer: float
    prev_rung: int = 0
    playing: bool = True
    threshold: float | None = None
    resume_threshold: float | None = None


@dataclass(frozen=True)
class MpcDecision:
    rung: int
    plan: tuple[int, ...]
    value: float
    floor_invoked: bool  # slot 0 had no rung under the bandwidth budget
    searched: str  # "exhaustive" or "annealing"


def planning_weights(weights: QoeWeights, n_chunks: int) -> QoeWeights:
    """Per-chunk form of the session QoE.

    The session score averages utility over ``n_chunks`` but charges
    rebuffering once per session, so one second of stall weighs as much as
    ``n_chunks`` chunk-utility units when the objective sums over chunks.
    """
    return QoeWeights(weights.w_r, weights.w_d, weights.w_b * n_chunks, weights.w_s,
                      weights.d_ref, weights.b_ref)


def _kernel_inputs(forecast: Forecast, ladder: BitrateLadder, cfg: SessionConfig, h: int):
    if forecast.horizon < h:
        raise ValueError(f"forecast horizon {forecast.horizon} shorter than plan length {h}")
    bits = [r.bitrate * cfg.chunk_duration for r in ladder.reps]
    bw = forecast.bandwidth_hat[:h]
    rtt_s = [v / 1000.0 for v in forecast.rtt_hat[:h]]
    return bits, list(ladder.utilities()), bw, rtt_s


def _state_args(state: PlanState, util: Sequence[float], cfg: SessionConfig):
    thr = cfg.startup_threshold if state.threshold is None else state.threshold
    resume = cfg.rebuffer_resume_threshold if state.resume_threshold is None else state.resume_threshold
    return (state.buffer, util[state.prev_rung], state.playing, thr, resume,
            cfg.chunk_duration, cfg.max_buffer)


def plan_objective(plan: Sequence[int], forecast: Forecast, state: PlanState,
                   ladder: BitrateLadder, cfg: SessionConfig, weights: QoeWeights) -> float:
    """Sum over slots of ``w_r*u - w_b*min(stall, b_ref)/b_ref - w_s*|du|`` under the forecast."""
    plan = tuple(plan)
    if not plan:
        raise ValueError("empty plan")
    if min(plan) < 0 or max(plan) >= len(ladder):
        raise ValueError("plan references a rung outside the ladder")
    bits, util, bw, rtt_s = _kernel_inputs(forecast, ladder, cfg, len(plan))
    return kernels.evaluate_plan(plan, bits, util, bw, rtt_s, *_state_args(state, util, cfg),
                                 weights.w_r, weights.w_b, weights.w_s, weights.b_ref)


def feasible_limits(forecast: Forecast, ladder: BitrateLadder, horizon: int,
                    safety: float) -> tuple[list[int], list[bool]]:
    """Highest rung per slot with ``bitrate <= safety * bandwidth_hat``; floor flags."""
    limits, floors = [], []
    for k in range(horizon):
        budget = safety * forecast.bandwidth_hat[k]
        top = -1
        for i, rep in enumerate(ladder.reps):
            if rep.bitrate <= budget:
                top = i
        floors.append(top < 0)
        limits.append(max(top, 0))
    return limits, floors


def mpc_plan(forecast: Forecast, state: PlanState, ladder: BitrateLadder, device: DeviceProfile,
             horizon: int, safety: float, search=Exhaustive(), weights: QoeWeights = QoeWeights(),
             cfg: SessionConfig = SessionConfig()) -> MpcDecision:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not 0 < safety <= 1:
        raise ValueError("safety must be in (0, 1]")
    visible = ladder.filtered(device)
    if len(visible) != len(ladder):
        # rung indices refer to the device-filtered ladder
        ladder = visible
    limits, floors = feasible_limits(forecast, ladder, horizon, safety)
    bits, util, bw, rtt_s = _kernel_inputs(forecast, ladder, cfg, horizon)
    sargs = _state_args(state, util, cfg)
    wargs = (weights.w_r, weights.w_b, weights.w_s, weights.b_ref)
    count = math.prod(n + 1 for n in limits)
    if isinstance(search, Exhaustive) and count <= EXHAUSTIVE_LIMIT:
        plan, value = kernels.search_plans(limits, bits, util, bw, rtt_s, *sargs, *wargs)
        how = "exhaustive"
    else:
        params = search.params if isinstance(search, Annealing) else AnnealingParams()

        def objective(p):
            return kernels.evaluate_plan(p, bits, util, bw, rtt_s, *sargs, *wargs)

        plan = sa_optimize(horizon, len(ladder), [range(n + 1) for n in limits], objective, params)
        value = objective(plan)
        how = "annealing"
    return MpcDecision(plan[0], plan, value, floors[0], how)


def mpc_select(forecast: Forecast, state: PlanState, ladder: BitrateLadder, device: DeviceProfile,
               horizon: int, safety: float, search=Exhaustive(), weights: QoeWeights = QoeWeights(),
               cfg: SessionConfig = SessionConfig()) -> int:
    """First rung of the best feasible plan (index into the device-filtered ladder)."""
    return mpc_plan(forecast, state, ladder, device, horizon, safety, search, weights, cfg).rung


def buffering_strategy(rtt_hat: Sequence[float], l_max: float, cfg: SessionConfig) -> tuple[float, float]:
    """Startup and resume thresholds scaled up with mean predicted rtt (ms) relative to ``l_max``."""
    if not rtt_hat:
        raise ValueError("rtt forecast is empty")
    factor = 1.0 + (sum(rtt_hat) / len(rtt_hat)) / l_max
    cap = cfg.max_buffer / 2.0

    def scale(base):
        return max(base, min(base * factor, cap))

    return scale(cfg.startup_threshold), scale(cfg.rebuffer_resume_threshold)
