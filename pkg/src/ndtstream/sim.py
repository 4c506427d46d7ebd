"""Discrete-event streaming session: chunk downloads over a trace, client buffer, KPIs.

Event order per chunk is fixed: download completes, buffer is credited,
telemetry is observed, the controller decides, the next request goes out.
Downloads are sequential and pause while the buffer cannot take another
chunk. Playback starts once ``startup_threshold`` seconds are buffered and,
after a stall, resumes at ``rebuffer_resume_threshold``. Both thresholds are
latched when the wait begins.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .control import DecisionContext, Policy, make_policy
from .media import BitrateLadder, DeviceProfile, Representation, SessionConfig
from .netmodel import LinkTrace, NetworkSample, goodput
from .qoe import QoeWeights, SessionMetrics, chunk_utility, qoe_score, smoothness
from .twin import DigitalTwin, FitReport, InsufficientHistory, TwinConfig


# download and buffer levels closer than this are equal (float residue, not a stall)
EPS = 1e-9


class StallError(RuntimeError):
    """A download could not finish within the stall timeout (or before the trace ended)."""

    def __init__(self, message: str, waited: float):
        super().__init__(message)
        self.waited = waited


class IncompleteSession(ValueError):
    pass


class InvariantViolation(AssertionError):
    pass


# conservation holds exactly in real arithmetic; floats leave a few ulps of residue
CONSERVATION_TOL = 1e-9


def _transfer_end(bits: float, trace: LinkTrace, t_start: float, rtt_ms: float,
                  stall_timeout: Optional[float]) -> tuple[float, float]:
    """(completion time, time the first payload bit moved) for a request at ``t_start``.

    Nothing arrives past the end of the trace, so a transfer still running
    there waits out the stall timeout (or fails at once without one).
    """
    t = begin = t_start + rtt_ms / 1000.0
    deadline = float("inf") if stall_timeout is None else t_start + stall_timeout
    remaining = bits
    i = trace.index_at(t) if t < trace.duration else len(trace.samples)
    while i < len(trace.samples) and t < deadline:
        seg_end = trace.segment_end(i)
        rate = goodput(trace.samples[i])
        if rate > 0 and rate * (seg_end - t) >= remaining:
            end = t + remaining / rate
            if end > deadline:
                break
            return end, begin
        remaining -= rate * (seg_end - t)
        t = seg_end
        i += 1
    waited = (deadline if stall_timeout is not None else max(t, trace.duration)) - t_start
    raise StallError(f"transfer started at t={t_start} stalled after {waited:.3f}s", waited)


def download_time(nbytes: float, trace: LinkTrace, t_start: float, rtt: float,
                  stall_timeout: Optional[float] = None) -> float:
    """Seconds to fetch ``nbytes``: one rtt handshake, then the payload at goodput.

    The payload integrates the piecewise-constant goodput exactly, segment by
    segment. Raises :class:`StallError` when the transfer cannot finish
    before the trace ends or within ``stall_timeout`` seconds.
    """
    if nbytes <= 0:
        raise ValueError("bytes must be > 0")
    trace.index_at(t_start)  # range check
    end, _ = _transfer_end(8.0 * nbytes, trace, t_start, rtt, stall_timeout)
    return end - t_start


@dataclass(frozen=True)
class ChunkRecord:
    index: int
    rep: Representation
    request_t: float
    complete_t: float
    bytes: float
    rebuffered_before: float
    throughput: float  # measured goodput, bits/s
    rtt: float  # ms at request time
    buffer_after: float  # buffer level once this chunk is credited
    floor: bool = False  # chosen under the liveness floor


@dataclass
class SessionLog:
    chunks: list
    startup_delay: float
    total_rebuffer: float
    metrics: Optional[SessionMetrics]
    qoe: float
    forecast_reports: list
    ladder: BitrateLadder
    chunk_duration: float
    complete: bool = True
    playback_end: Optional[float] = None
    stall_wait: float = 0.0
    latency_violations: int = 0
    controller: str = ""
    forecast_pairs: dict = field(default_factory=dict)
    abort_rebuffer: float = 0.0  # stall the viewer sat through before an abort

    @property
    def experienced_rebuffer(self) -> float:
        return self.total_rebuffer + self.abort_rebuffer

    @property
    def mean_bitrate(self) -> float:
        if not self.chunks:
            return 0.0
        return sum(c.rep.bitrate for c in self.chunks) / len(self.chunks)

    @property
    def switches(self) -> int:
        return sum(1 for a, b in zip(self.chunks, self.chunks[1:]) if a.rep != b.rep)

    @property
    def floor_count(self) -> int:
        return sum(1 for c in self.chunks if c.floor)


def compute_metrics(log: SessionLog, ladder: Optional[BitrateLadder] = None,
                    weights: QoeWeights = QoeWeights()) -> tuple[SessionMetrics, float]:
    """KPIs and QoE recomputed from the chunk records of a complete session."""
    if not log.complete:
        raise IncompleteSession("metrics need a complete session log")
    ladder = ladder or log.ladder
    utils = [chunk_utility(c.rep.bitrate, ladder) for c in log.chunks]
    m = SessionMetrics(
        min(sum(utils) / len(utils), 1.0),
        log.startup_delay,
        sum(c.rebuffered_before for c in log.chunks),
        min(smoothness(utils), 1.0),
    )
    return m, qoe_score(m, weights)


def score_incomplete(log: SessionLog, weights: QoeWeights = QoeWeights()) -> tuple[SessionMetrics, float]:
    """Aborted sessions keep their chunks but pay the full rebuffering penalty."""
    utils = [chunk_utility(c.rep.bitrate, log.ladder) for c in log.chunks]
    m = SessionMetrics(
        min(sum(utils) / len(utils), 1.0) if utils else 0.0,
        log.startup_delay,
        weights.b_ref,
        min(smoothness(utils), 1.0) if utils else 0.0,
    )
    return m, qoe_score(m, weights)


def run_session(
    trace: LinkTrace,
    ladder: BitrateLadder,
    device: DeviceProfile,
    controller,
    cfg: SessionConfig = SessionConfig(),
    twin: TwinConfig | DigitalTwin | None = None,
    seed: int = 0,
    weights: QoeWeights = QoeWeights(),
) -> SessionLog:
    """Stream ``cfg.content_duration`` seconds of content over ``trace``.

    ``controller`` is a controller kind or an already built
    :class:`~ndtstream.control.Policy`. A stalled download ends the
    session early with ``complete=False``.
    """
    visible = ladder.filtered(device)
    policy = controller if isinstance(controller, Policy) else make_policy(
        controller, ladder, device, cfg, weights, seed)
    if isinstance(twin, DigitalTwin):
        dtwin = twin
    else:
        dtwin = (twin or TwinConfig()).build()

    C = cfg.chunk_duration
    n = cfg.n_chunks
    t = 0.0
    buffer = 0.0
    playing = started = False
    startup_delay = None
    wait_thr, _ = policy.thresholds()
    chunks: list[ChunkRecord] = []
    throughputs: list[float] = []
    rung, floor = policy.first_rung(), False
    violations = 0
    ctx = DecisionContext(0, 0.0, False, wait_thr, rung, 0.0, throughputs, None)
    stall_wait = None

    for k in range(n):
        if playing and buffer + C > cfg.max_buffer:
            t += buffer + C - cfg.max_buffer
            buffer = cfg.max_buffer - C
        rep = visible[rung]
        nbytes = rep.bitrate * C / 8.0
        request_t = t
        try:
            # past the end of the trace the last rtt still applies to the request
            sample = trace.samples[trace.index_at(min(t, trace.samples[-1].t))]
            end, begin = _transfer_end(8.0 * nbytes, trace, t, sample.rtt, cfg.stall_timeout)
        except StallError as exc:
            stall_wait = exc.waited
            break
        if sample.rtt > device.l_max:
            violations += 1
        dl = end - t
        if playing:
            if dl > buffer + EPS:
                reb = dl - buffer
                buffer = 0.0
                playing = False
                wait_thr = policy.thresholds()[1]
            else:
                reb = 0.0
                buffer = max(buffer - dl, 0.0)
        else:
            reb = dl if started else 0.0
        t = end
        buffer += C
        if not playing and (buffer >= wait_thr or buffer + C > cfg.max_buffer or k == n - 1):
            playing = True
            if not started:
                started = True
                startup_delay = t
        tput = 8.0 * nbytes / (end - begin)
        chunks.append(ChunkRecord(k, rep, request_t, end, nbytes, reb, tput, sample.rtt,
                                  buffer, floor))
        throughputs.append(tput)
        dtwin.observe(NetworkSample(t, sample.bandwidth, sample.rtt, sample.loss), tput)
        if k < n - 1:
            try:
                fc = dtwin.forecast(max(policy.horizon, 1), C)
            except InsufficientHistory:
                fc = None
            ctx = DecisionContext(k + 1, buffer, playing, wait_thr, rung, reb, throughputs, fc)
            rung, floor = policy.select(ctx)
        else:
            ctx = DecisionContext(k + 1, buffer, playing, wait_thr, rung, reb, throughputs, None)
    policy.finish(ctx)

    complete = stall_wait is None
    abort_rebuffer = 0.0
    if not complete and started:
        abort_rebuffer = max(stall_wait - buffer, 0.0) if playing else stall_wait
    total_rebuffer = sum(c.rebuffered_before for c in chunks)
    if startup_delay is None:
        startup_delay = t + (stall_wait or 0.0)
    log = SessionLog(
        chunks=chunks,
        startup_delay=startup_delay,
        total_rebuffer=total_rebuffer,
        metrics=None,
        qoe=0.0,
        forecast_reports=dtwin.reports(),
        ladder=visible,
        chunk_duration=C,
        complete=complete,
        playback_end=t + buffer if complete else None,
        stall_wait=stall_wait or 0.0,
        abort_rebuffer=abort_rebuffer,
        latency_violations=violations,
        controller=policy.name,
        forecast_pairs={"bandwidth": (list(dtwin.bw_pred), list(dtwin.bw_actual)),
                        "rtt": (list(dtwin.rtt_pred), list(dtwin.rtt_actual))},
    )
    log.metrics, log.qoe = compute_metrics(log, visible, weights) if complete else score_incomplete(log, weights)
    check_invariants(log, device, cfg)
    return log


def check_invariants(log: SessionLog, device: DeviceProfile, cfg: SessionConfig) -> None:
    """Raise :class:`InvariantViolation` unless ``log`` obeys the session invariants.

    Conservation of playback time, non-negative buffer at every credit,
    device resolution limits, bytes per chunk and monotone timestamps.
    """
    prev_end = 0.0
    for c in log.chunks:
        if c.buffer_after < 0 or c.buffer_after > cfg.max_buffer + CONSERVATION_TOL:
            raise InvariantViolation(f"chunk {c.index}: buffer {c.buffer_after} out of range")
        if not device.supports(c.rep):
            raise InvariantViolation(f"chunk {c.index}: {c.rep.label} exceeds the device limits")
        if not c.complete_t > c.request_t >= prev_end:
            raise InvariantViolation(f"chunk {c.index}: timestamps out of order")
        if c.bytes != c.rep.bitrate * cfg.chunk_duration / 8.0 or c.rebuffered_before < 0:
            raise InvariantViolation(f"chunk {c.index}: inconsistent record")
        prev_end = c.complete_t
    if log.total_rebuffer != sum(c.rebuffered_before for c in log.chunks):
        raise InvariantViolation("total_rebuffer differs from the per-chunk sum")
    if log.complete:
        if len(log.chunks) != cfg.n_chunks:
            raise InvariantViolation("complete session is missing chunks")
        expect = log.startup_delay + cfg.content_duration + log.total_rebuffer
        if abs(log.playback_end - expect) > CONSERVATION_TOL * max(1.0, expect):
            raise InvariantViolation(
                f"playback ends at {log.playback_end}, conservation says {expect}")
        if log.chunks and log.startup_delay < log.chunks[0].complete_t - log.chunks[0].request_t:
            raise InvariantViolation("startup shorter than the first download")


def _rep_dict(rep: Representation) -> dict:
    return {"bitrate": rep.bitrate, "height": rep.height, "label": rep.label, "width": rep.width}


def session_log_to_dict(log: SessionLog) -> dict:
    return {
        "chunks": [
            {
                "buffer_after": c.buffer_after,
                "bytes": c.bytes,
                "complete_t": c.complete_t,
                "floor": c.floor,
                "index": c.index,
                "rebuffered_before": c.rebuffered_before,
                "rep": _rep_dict(c.rep),
                "request_t": c.request_t,
                "rtt_ms": c.rtt,
                "throughput_bps": c.throughput,
            }
            for c in log.chunks
        ],
        "complete": log.complete,
        "controller": log.controller,
        "forecast_reports": [
            {"mae": r.mae, "mape": r.mape, "n": r.n} for r in log.forecast_reports
        ],
        "abort_rebuffer": log.abort_rebuffer,
        "latency_violations": log.latency_violations,
        "metrics": None if log.metrics is None else {
            "b": log.metrics.b, "d": log.metrics.d, "r_util": log.metrics.r_util, "s": log.metrics.s,
        },
        "playback_end": log.playback_end,
        "qoe": log.qoe,
        "stall_wait": log.stall_wait,
        "startup_delay": log.startup_delay,
        "total_rebuffer": log.total_rebuffer,
    }


def session_log_to_json(log: SessionLog) -> str:
    """Stable-key-order JSON (chunk array plus metrics object)."""
    return json.dumps(session_log_to_dict(log), sort_keys=True, indent=2)


__all__ = [
    "StallError", "IncompleteSession", "InvariantViolation", "check_invariants", "download_time", "ChunkRecord", "SessionLog",
    "compute_metrics", "score_incomplete", "run_session", "session_log_to_dict",
    "session_log_to_json", "FitReport",
]
