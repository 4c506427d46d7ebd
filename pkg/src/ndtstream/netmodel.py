"""Piecewise-constant network traces and the canonical experiment scenarios."""
from __future__ import annotations

import bisect
import csv
import enum
import io
import random
from dataclasses import dataclass
from pathlib import Path

TRACE_HEADER = ("t_s", "bandwidth_kbps", "rtt_ms", "loss_rate")

# per-second probability of leaving the current Markov state
SWITCH_PROB = 0.2


class TraceFormatError(ValueError):
    """Raised when a trace file or trace construction violates the format."""


class OutOfRangeError(ValueError):
    pass


@dataclass(frozen=True)
class NetworkSample:
    t: float  # seconds from session start
    bandwidth: float  # bits/s, raw link rate
    rtt: float  # milliseconds
    loss: float  # fraction in [0, 1]

    def __post_init__(self):
        if self.t < 0:
            raise ValueError(f"sample time must be >= 0, got {self.t}")
        if self.bandwidth < 0:
            raise ValueError(f"bandwidth must be >= 0, got {self.bandwidth}")
        if self.rtt < 0:
            raise ValueError(f"rtt must be >= 0, got {self.rtt}")
        if not 0.0 <= self.loss <= 1.0:
            raise ValueError(f"loss must be in [0, 1], got {self.loss}")


@dataclass(frozen=True)
class LinkTrace:
    """Network conditions; sample i holds on ``[t_i, t_{i+1})``."""

    samples: tuple[NetworkSample, ...]
    duration: float

    def __post_init__(self):
        samples = tuple(self.samples)
        object.__setattr__(self, "samples", samples)
        if not samples:
            raise TraceFormatError("trace has no samples")
        if samples[0].t != 0:
            raise TraceFormatError(f"first sample must be at t=0, got {samples[0].t}")
        for prev, cur in zip(samples, samples[1:]):
            if cur.t <= prev.t:
                raise TraceFormatError(f"non-monotonic timestamps at t={cur.t}")
        if self.duration < samples[-1].t or self.duration <= 0:
            raise TraceFormatError(
                f"duration {self.duration} does not cover last sample at t={samples[-1].t}"
            )
        object.__setattr__(self, "_times", [s.t for s in samples])

    def __len__(self):
        return len(self.samples)

    def index_at(self, t: float) -> int:
        if not 0 <= t < self.duration:
            raise OutOfRangeError(f"t={t} outside trace [0, {self.duration})")
        return bisect.bisect_right(self._times, t) - 1

    def segment_end(self, i: int) -> float:
        """End of the hold interval of sample ``i``."""
        if i + 1 < len(self.samples):
            return self.samples[i + 1].t
        return self.duration

    def scaled(self, bandwidth_factor: float) -> "LinkTrace":
        """Copy with every bandwidth multiplied by ``bandwidth_factor``."""
        return LinkTrace(
            tuple(
                NetworkSample(s.t, s.bandwidth * bandwidth_factor, s.rtt, s.loss)
                for s in self.samples
            ),
            self.duration,
        )


def sample_at(trace: LinkTrace, t: float) -> NetworkSample:
    return trace.samples[trace.index_at(t)]


def goodput(sample: NetworkSample) -> float:
    """Loss-adjusted rate available to the application, bits/s."""
    return sample.bandwidth * (1.0 - sample.loss)


class ScenarioKind(enum.Enum):
    LowBandwidth = "LowBandwidth"
    HighLatency = "HighLatency"
    PacketLoss = "PacketLoss"
    Stable = "Stable"

    @classmethod
    def parse(cls, name: str) -> "ScenarioKind":
        key = name.strip().replace("_", "").replace("-", "").lower()
        for kind in cls:
            if kind.value.lower() == key:
                return kind
        raise ValueError(
            f"unknown scenario {name!r}; expected one of {[k.value for k in cls]}"
        )


MBPS = 1e6

# (bandwidth states bit/s, rtt states ms, loss states); exactly one tuple has > 1 entry
SCENARIO_STATES: dict[ScenarioKind, tuple[tuple[float, ...], tuple[float, ...], tuple[float, ...]]] = {
    ScenarioKind.LowBandwidth: ((0.8 * MBPS, 2.5 * MBPS), (50.0,), (0.0,)),
    ScenarioKind.HighLatency: ((6.0 * MBPS,), (300.0, 800.0), (0.0,)),
    ScenarioKind.PacketLoss: ((8.0 * MBPS,), (80.0,), (0.0, 0.05, 0.15)),
    ScenarioKind.Stable: ((10.0 * MBPS,), (30.0,), (0.0,)),
}


def transition_matrix(n_states: int, switch_prob: float = SWITCH_PROB) -> list[list[float]]:
    """Markov chain that leaves its state w.p. ``switch_prob``, uniformly among the others."""
    if n_states == 1:
        return [[1.0]]
    off = switch_prob / (n_states - 1)
    return [
        [1.0 - switch_prob if i == j else off for j in range(n_states)]
        for i in range(n_states)
    ]


def _markov_path(rng: random.Random, n_states: int, steps: int) -> list[int]:
    if n_states == 1:
        return [0] * steps
    state = rng.randrange(n_states)
    path = []
    for _ in range(steps):
        path.append(state)
        if rng.random() < SWITCH_PROB:
            other = rng.randrange(n_states - 1)
            state = other if other < state else other + 1
    return path


def gen_scenario(kind: ScenarioKind, duration: float = 300, seed: int = 0) -> LinkTrace:
    """One sample per second; only the scenario's stressed dimension varies."""
    if duration <= 0:
        raise ValueError(f"duration must be > 0, got {duration}")
    if isinstance(kind, str):
        kind = ScenarioKind.parse(kind)
    steps = int(duration)
    if steps < duration:
        steps += 1
    bws, rtts, losses = SCENARIO_STATES[kind]
    rng = random.Random(seed)
    stressed = max((bws, rtts, losses), key=len)
    path = _markov_path(rng, len(stressed), steps)
    samples = []
    for t, state in enumerate(path):
        bw = bws[state] if len(bws) > 1 else bws[0]
        rtt = rtts[state] if len(rtts) > 1 else rtts[0]
        loss = losses[state] if len(losses) > 1 else losses[0]
        samples.append(NetworkSample(float(t), bw, rtt, loss))
    return LinkTrace(tuple(samples), float(duration))


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def dumps_trace(trace: LinkTrace) -> str:
    buf = io.StringIO()
    buf.write(",".join(TRACE_HEADER) + "\n")
    for s in trace.samples:
        buf.write(f"{_fmt(s.t)},{_fmt(s.bandwidth / 1000.0)},{_fmt(s.rtt)},{_fmt(s.loss)}\n")
    return buf.getvalue()


def save_trace(trace: LinkTrace, path) -> None:
    Path(path).write_text(dumps_trace(trace), encoding="utf-8", newline="\n")


def parse_trace(text: str) -> LinkTrace:
    lines = text.splitlines()
    if not lines or tuple(h.strip() for h in lines[0].split(",")) != TRACE_HEADER:
        raise TraceFormatError(f"line 1: expected header {','.join(TRACE_HEADER)}")
    samples: list[NetworkSample] = []
    for lineno, row in enumerate(csv.reader(lines[1:]), start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise TraceFormatError(f"line {lineno}: expected 4 columns, got {len(row)}")
        try:
            t, bw_kbps, rtt, loss = (float(c) for c in row)
        except ValueError as exc:
            raise TraceFormatError(f"line {lineno}: non-numeric value ({exc})") from None
        if samples and t <= samples[-1].t:
            raise TraceFormatError(f"line {lineno}: non-monotonic timestamps (t={_fmt(t)})")
        if not 0.0 <= loss <= 1.0:
            raise TraceFormatError(f"line {lineno}: loss {loss} outside [0, 1]")
        try:
            samples.append(NetworkSample(t, bw_kbps * 1000.0, rtt, loss))
        except ValueError as exc:
            raise TraceFormatError(f"line {lineno}: {exc}") from None
    if not samples:
        raise TraceFormatError("trace has no samples")
    if samples[0].t != 0:
        raise TraceFormatError("line 2: first sample must be at t=0")
    hold = samples[-1].t - samples[-2].t if len(samples) > 1 else 1.0
    return LinkTrace(tuple(samples), samples[-1].t + hold)


def load_trace(path) -> LinkTrace:
    """Read a trace CSV (``t_s,bandwidth_kbps,rtt_ms,loss_rate``)."""
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    return parse_trace(text)
