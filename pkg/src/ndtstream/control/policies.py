"""Controller kinds (configuration values) and the per-session policies built from them."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

import numpy as np

from ..media import BitrateLadder, DeviceProfile, SessionConfig
from ..qoe import QoeWeights
from ..twin import DigitalTwin, Forecast
from .baselines import buffer_based_select, rate_based_select
from .mpc import Annealing, Exhaustive, PlanState, buffering_strategy, mpc_plan, planning_weights
from .qlearning import QParams, bandwidth_bin, buffer_bin, q_select, q_update


@dataclass(frozen=True)
class RateBased:
    safety: float = 0.9

    def __post_init__(self):
        if not 0 < self.safety <= 1:
            raise ValueError("safety must be in (0, 1]")

    name = "RateBased"


@dataclass(frozen=True)
class BufferBased:
    reservoir: float = 5.0
    cushion: float = 20.0

    def __post_init__(self):
        if not 0 <= self.reservoir < self.cushion:
            raise ValueError("need 0 <= reservoir < cushion")

    name = "BufferBased"


@dataclass(frozen=True)
class PredictiveMpc:
    horizon: int = 5
    safety: float = 0.9
    search: Union[Exhaustive, Annealing] = field(default_factory=Exhaustive)
    adaptive_buffering: bool = True

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 0 < self.safety <= 1:
            raise ValueError("safety must be in (0, 1]")

    name = "PredictiveMpc"


@dataclass(frozen=True)
class QLearning:
    params: QParams = field(default_factory=QParams)

    name = "QLearning"


ControllerKind = Union[RateBased, BufferBased, PredictiveMpc, QLearning]


class Choice(NamedTuple):
    rung: int
    floor: bool = False  # liveness floor: no rung fit the predicted-bandwidth budget


@dataclass
class DecisionContext:
    """What a controller sees when choosing the next chunk."""

    index: int  # index of the chunk about to be requested
    buffer: float
    playing: bool
    threshold_now: float  # threshold ending the current wait, if not playing
    prev_rung: int
    last_rebuffer: float
    throughputs: list
    forecast: Optional[Forecast]


class Policy:
    name = "Policy"
    horizon = 1

    def __init__(self, ladder: BitrateLadder, device: DeviceProfile, cfg: SessionConfig,
                 weights: QoeWeights):
        self.ladder = ladder
        self.device = device
        self.cfg = cfg
        self.weights = weights
        self.bitrates = ladder.bitrates
        self.utilities = ladder.utilities()

    def first_rung(self) -> int:
        return 0

    def thresholds(self) -> tuple[float, float]:
        return self.cfg.startup_threshold, self.cfg.rebuffer_resume_threshold

    def select(self, ctx: DecisionContext) -> Choice:
        raise NotImplementedError

    def finish(self, ctx: DecisionContext) -> None:
        pass


class RateBasedPolicy(Policy):
    name = "RateBased"

    def __init__(self, kind: RateBased, *args):
        super().__init__(*args)
        self.kind = kind

    def select(self, ctx):
        if not ctx.throughputs:
            return Choice(0)
        return Choice(rate_based_select(ctx.throughputs, self.bitrates, self.kind.safety))


class BufferBasedPolicy(Policy):
    name = "BufferBased"

    def __init__(self, kind: BufferBased, *args):
        super().__init__(*args)
        self.kind = kind

    def select(self, ctx):
        return Choice(buffer_based_select(ctx.buffer, len(self.ladder), self.kind.reservoir,
                                          self.kind.cushion))


class PredictiveMpcPolicy(Policy):
    name = "PredictiveMpc"

    def __init__(self, kind: PredictiveMpc, *args, n_chunks: int):
        super().__init__(*args)
        self.kind = kind
        self.horizon = kind.horizon
        self.plan_weights = planning_weights(self.weights, n_chunks)
        self._thresholds = super().thresholds()
        self.decisions = []

    def thresholds(self):
        return self._thresholds

    def select(self, ctx):
        fc = ctx.forecast
        if fc is None:
            # twin lacks history for its predictor: fall back to the throughput rule
            if not ctx.throughputs:
                return Choice(0)
            return Choice(rate_based_select(ctx.throughputs, self.bitrates, self.kind.safety))
        if self.kind.adaptive_buffering:
            self._thresholds = buffering_strategy(fc.rtt_hat, self.device.l_max, self.cfg)
        state = PlanState(ctx.buffer, ctx.prev_rung, ctx.playing, ctx.threshold_now,
                          self._thresholds[1])
        decision = mpc_plan(fc, state, self.ladder, self.device, self.kind.horizon,
                            self.kind.safety, self.kind.search, self.plan_weights, self.cfg)
        self.decisions.append(decision)
        return Choice(decision.rung, decision.floor_invoked)


class QLearningPolicy(Policy):
    name = "QLearning"

    def __init__(self, kind: QLearning, *args, n_chunks: int, table=None, training=False,
                 seed: int = 0):
        super().__init__(*args)
        self.params = kind.params
        n = len(self.ladder)
        shape = (self.params.buffer_bins, self.params.bw_bins, n, n)
        self.Q = np.zeros(shape) if table is None else table
        if self.Q.shape != shape:
            raise ValueError(f"Q table shape {self.Q.shape} does not match {shape}")
        self.training = training
        self.rng = random.Random(seed)
        self.plan_weights = planning_weights(self.weights, n_chunks)
        self._last = None  # (state, action, utility before the action)
        self.bw_lo = self.bitrates[0]
        self.bw_hi = 2.0 * self.bitrates[-1]

    def state(self, ctx) -> tuple[int, int, int]:
        tput = ctx.throughputs[-1] if ctx.throughputs else 0.0
        return (
            buffer_bin(ctx.buffer, self.cfg.max_buffer, self.params.buffer_bins),
            bandwidth_bin(tput, self.bw_lo, self.bw_hi, self.params.bw_bins),
            ctx.prev_rung,
        )

    def reward(self, action: int, prev_u: float, rebuffer: float) -> float:
        w = self.plan_weights
        u = self.utilities[action]
        return w.w_r * u - w.w_b * (min(rebuffer, w.b_ref) / w.b_ref) - w.w_s * abs(u - prev_u)

    def select(self, ctx):
        s = self.state(ctx)
        if self._last is not None and self.training:
            ls, la, lu = self._last
            q_update(self.Q, ls, la, self.reward(la, lu, ctx.last_rebuffer), s,
                     self.params.alpha, self.params.gamma)
        eps = self.params.epsilon if self.training else 0.0
        a = q_select(self.Q, s, eps, self.rng)
        self._last = (s, a, self.utilities[ctx.prev_rung])
        return Choice(a)

    def finish(self, ctx):
        if self._last is not None and self.training:
            ls, la, lu = self._last
            q_update(self.Q, ls, la, self.reward(la, lu, ctx.last_rebuffer), None,
                     self.params.alpha, self.params.gamma, terminal=True)
        self._last = None


def make_policy(kind: ControllerKind, ladder: BitrateLadder, device: DeviceProfile,
                cfg: SessionConfig, weights: QoeWeights, seed: int = 0, **extra) -> Policy:
    """Instantiate the session policy for ``kind`` over the device-filtered ladder."""
    visible = ladder.filtered(device)
    args = (visible, device, cfg, weights)
    if isinstance(kind, RateBased):
        return RateBasedPolicy(kind, *args)
    if isinstance(kind, BufferBased):
        return BufferBasedPolicy(kind, *args)
    if isinstance(kind, PredictiveMpc):
        return PredictiveMpcPolicy(kind, *args, n_chunks=cfg.n_chunks)
    if isinstance(kind, QLearning):
        return QLearningPolicy(kind, *args, n_chunks=cfg.n_chunks, seed=seed, **extra)
    raise TypeError(f"unknown controller kind {kind!r}")
