"""Network digital twin: telemetry ingestion, short-term forecasting, self-assessment.

The twin keeps a bounded history of network samples, each paired with the
goodput measured on the chunk download that completed at that moment, and
forecasts the next few chunk slots from it. Four predictors are available:

* ``EWMA(alpha)``: exponentially weighted mean, seeded with the first value.
* ``AR(p, d)``: autoregression fitted by ordinary least squares, optionally on
  the once-differenced series.
* ``HarmonicMean(k)``: harmonic mean of the last ``k`` values.
* ``MLP(hidden, lr, epochs, window)``: one tanh hidden layer trained by
  full-batch gradient descent on sliding windows.

Multi-step forecasts are recursive: each prediction is appended to the
history before the next one is made.
"""
from __future__ import annotations

import collections
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .netmodel import NetworkSample

RIDGE = 1e-8
# normal matrices beyond this condition number get the ridge term
SINGULAR_COND = 1e12
REFINE_STEPS = 2


class InsufficientHistory(ValueError):
    pass


class DivergentTraining(FloatingPointError):
    pass


# -- telemetry ---------------------------------------------------------------

@dataclass(frozen=True)
class TelemetryEntry:
    sample: NetworkSample
    throughput: float  # measured chunk goodput, bits/s


class Telemetry:
    """Bounded FIFO of telemetry entries, most recent last."""

    def __init__(self, capacity: int = 120):
        if capacity < 2:
            raise ValueError(f"telemetry capacity must be >= 2, got {capacity}")
        self.capacity = capacity
        self._entries: collections.deque[TelemetryEntry] = collections.deque(maxlen=capacity)

    def __len__(self):
        return len(self._entries)

    @property
    def entries(self) -> tuple[TelemetryEntry, ...]:
        return tuple(self._entries)

    def observe(self, sample: NetworkSample, measured_throughput: float) -> "Telemetry":
        if self._entries and sample.t < self._entries[-1].sample.t:
            raise ValueError(
                f"time regression: t={sample.t} is older than newest entry "
                f"t={self._entries[-1].sample.t}"
            )
        self._entries.append(TelemetryEntry(sample, float(measured_throughput)))
        return self

    def throughputs(self) -> list[float]:
        return [e.throughput for e in self._entries]

    def rtts(self) -> list[float]:
        return [e.sample.rtt for e in self._entries]

    @property
    def newest_t(self) -> float:
        if not self._entries:
            raise InsufficientHistory("telemetry is empty")
        return self._entries[-1].sample.t


def observe(twin: Telemetry, sample: NetworkSample, measured_throughput: float) -> Telemetry:
    return twin.observe(sample, measured_throughput)


# -- predictor kinds -----------------------------------------------------------

@dataclass(frozen=True)
class EWMA:
    alpha: float = 0.3

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"EWMA alpha must be in [0, 1], got {self.alpha}")

    @property
    def min_history(self) -> int:
        return 1


@dataclass(frozen=True)
class AR:
    p: int = 2
    d: int = 0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"AR order must be >= 1, got {self.p}")
        if self.d not in (0, 1):
            raise ValueError(f"AR differencing must be 0 or 1, got {self.d}")

    @property
    def min_history(self) -> int:
        return self.p + self.d + 1


@dataclass(frozen=True)
class HarmonicMean:
    k: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"harmonic mean window must be >= 1, got {self.k}")

    @property
    def min_history(self) -> int:
        return self.k


@dataclass(frozen=True)
class MLP:
    hidden: int = 8
    lr: float = 0.05
    epochs: int = 300
    window: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.hidden < 1 or self.epochs < 1 or self.window < 1:
            raise ValueError("MLP hidden, epochs and window must be >= 1")
        if not self.lr > 0:
            raise ValueError(f"MLP learning rate must be > 0, got {self.lr}")

    @property
    def min_history(self) -> int:
        return self.window + 1


PredictorKind = Union[EWMA, AR, HarmonicMean, MLP]


def parse_predictor(text: str) -> PredictorKind:
    """Parse ``ewma:0.3``, ``ar:2:1``, ``hm:5`` or ``mlp:hidden:lr:epochs:window``."""
    name, *args = [p.strip() for p in text.strip().split(":")]
    name = name.lower()
    try:
        if name == "ewma":
            return EWMA(*(float(a) for a in args))
        if name == "ar":
            return AR(*(int(a) for a in args))
        if name in ("hm", "harmonic", "harmonic_mean"):
            return HarmonicMean(*(int(a) for a in args))
        if name == "mlp":
            conv = (int, float, int, int, int)
            return MLP(*(c(a) for c, a in zip(conv, args)))
    except TypeError:
        raise ValueError(f"bad predictor parameters in {text!r}") from None
    raise ValueError(f"unknown predictor {text!r}")


def format_predictor(kind: PredictorKind) -> str:
    if isinstance(kind, EWMA):
        return f"ewma:{kind.alpha!r}"
    if isinstance(kind, AR):
        return f"ar:{kind.p}:{kind.d}"
    if isinstance(kind, HarmonicMean):
        return f"hm:{kind.k}"
    return f"mlp:{kind.hidden}:{kind.lr!r}:{kind.epochs}:{kind.window}:{kind.seed}"


# -- autoregression -----------------------------------------------------------

@dataclass(frozen=True)
class ARModel:
    intercept: float
    weights: tuple[float, ...]  # weights[i] multiplies the value i+1 steps back
    d: int = 0


def _lag_matrix(x: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    rows = len(x) - p
    X = np.ones((rows, p + 1))
    for i in range(1, p + 1):
        X[:, i] = x[p - i:len(x) - i]
    return X, x[p:]


def fit_ar(history: Sequence[float], p: int, d: int = 0) -> ARModel:
    """Least-squares AR(p) fit on the history, differenced ``d`` times first."""
    AR(p, d)  # validates ranges
    x = np.asarray(history, dtype=float)
    if len(x) < p + d + 1:
        raise InsufficientHistory(f"AR({p},{d}) needs >= {p + d + 1} points, got {len(x)}")
    if d:
        x = np.diff(x)
    # fit at unit scale so the ridge term means the same for bit/s and ms series
    peak = float(np.abs(x).max())
    scale = peak if peak > 0 else 1.0
    X, y = _lag_matrix(x / scale, p)
    A = X.T @ X
    rhs = X.T @ y
    singular = not np.isfinite(A).all() or np.linalg.cond(A) > SINGULAR_COND
    if not singular:
        try:
            beta = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            singular = True
    if singular:
        # ridge solve, then refine against the unregularized system so the
        # ridge does not bias series that the model fits exactly
        Ar = A + RIDGE * np.eye(p + 1)
        beta = np.linalg.solve(Ar, rhs)
        for _ in range(REFINE_STEPS):
            beta = beta + np.linalg.solve(Ar, rhs - A @ beta)
    return ARModel(float(beta[0]) * scale, tuple(float(b) for b in beta[1:]), d)


def ar_forecast(model: ARModel, history: Sequence[float], horizon: int) -> list[float]:
    p = len(model.weights)
    levels = [float(v) for v in history]
    series = [b - a for a, b in zip(levels, levels[1:])] if model.d else list(levels)
    if len(series) < p:
        raise InsufficientHistory(f"AR forecast needs {p + model.d} points, got {len(levels)}")
    out = []
    for _ in range(horizon):
        step = model.intercept + sum(w * series[-1 - i] for i, w in enumerate(model.weights))
        level = max(levels[-1] + step if model.d else step, 0.0)
        series.append(level - levels[-1] if model.d else level)
        levels.append(level)
        out.append(level)
    return out


# -- MLP -----------------------------------------------------------------------

@dataclass
class MLPParams:
    W1: np.ndarray  # (hidden, window)
    b1: np.ndarray  # (hidden,)
    W2: np.ndarray  # (hidden,)
    b2: float

    def flat(self) -> np.ndarray:
        return np.concatenate([self.W1.ravel(), self.b1, self.W2, [self.b2]])

    @classmethod
    def from_flat(cls, v: np.ndarray, hidden: int, window: int) -> "MLPParams":
        v = np.asarray(v, dtype=float)
        n1 = hidden * window
        return cls(
            v[:n1].reshape(hidden, window).copy(),
            v[n1:n1 + hidden].copy(),
            v[n1 + hidden:n1 + 2 * hidden].copy(),
            float(v[n1 + 2 * hidden]),
        )


@dataclass
class MLPModel:
    params: MLPParams
    scale: float
    window: int
    initial_loss: float
    final_loss: float


def init_mlp(hidden: int, window: int, seed: int) -> MLPParams:
    rng = np.random.default_rng(seed)
    return MLPParams(
        rng.normal(0.0, 1.0 / math.sqrt(window), size=(hidden, window)),
        np.zeros(hidden),
        rng.normal(0.0, 1.0 / math.sqrt(hidden), size=hidden),
        0.0,
    )


def sliding_windows(x: np.ndarray, window: int) -> tuple[np.ndarray, np.ndarray]:
    n = len(x) - window
    X = np.stack([x[i:i + window] for i in range(n)])
    return X, x[window:]


def mlp_forward(params: MLPParams, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    H = np.tanh(X @ params.W1.T + params.b1)
    return H @ params.W2 + params.b2, H


def mlp_loss_grad(params: MLPParams, X: np.ndarray, y: np.ndarray) -> tuple[float, MLPParams]:
    """Mean squared error over the windows and its gradient (backpropagation)."""
    pred, H = mlp_forward(params, X)
    err = pred - y
    n = len(y)
    loss = float(err @ err / n)
    e = 2.0 * err / n
    dz = np.outer(e, params.W2) * (1.0 - H * H)
    grad = MLPParams(dz.T @ X, dz.sum(axis=0), H.T @ e, float(e.sum()))
    return loss, grad


def train_mlp(history: Sequence[float], cfg: MLP, seed: int | None = None) -> MLPModel:
    x = np.asarray(history, dtype=float)
    if len(x) < cfg.window + 1:
        raise InsufficientHistory(f"MLP needs >= {cfg.window + 1} points, got {len(x)}")
    peak = float(x.max())
    scale = peak if peak > 0 else 1.0
    X, y = sliding_windows(x / scale, cfg.window)
    params = init_mlp(cfg.hidden, cfg.window, cfg.seed if seed is None else seed)
    with np.errstate(over="ignore", invalid="ignore"):
        return _descend(params, X, y, cfg, scale)


def _descend(params: MLPParams, X, y, cfg: MLP, scale: float) -> MLPModel:
    best, best_loss, initial = params, math.inf, None
    for _ in range(cfg.epochs):
        loss, grad = mlp_loss_grad(params, X, y)
        if not math.isfinite(loss):
            raise DivergentTraining(f"MLP loss became non-finite (lr={cfg.lr})")
        if initial is None:
            initial = loss
        if loss < best_loss:
            best, best_loss = params, loss
        params = MLPParams(
            params.W1 - cfg.lr * grad.W1,
            params.b1 - cfg.lr * grad.b1,
            params.W2 - cfg.lr * grad.W2,
            params.b2 - cfg.lr * grad.b2,
        )
    loss, _ = mlp_loss_grad(params, X, y)
    if not math.isfinite(loss):
        raise DivergentTraining(f"MLP loss became non-finite (lr={cfg.lr})")
    if loss < best_loss:
        best, best_loss = params, loss
    return MLPModel(best, scale, cfg.window, initial, best_loss)


def mlp_forecast(model: MLPModel, history: Sequence[float], horizon: int) -> list[float]:
    window = [v / model.scale for v in history[-model.window:]]
    out = []
    for _ in range(horizon):
        pred, _ = mlp_forward(model.params, np.asarray([window]))
        level = max(float(pred[0]), 0.0)
        out.append(level * model.scale)
        window = window[1:] + [level]
    return out


# -- prediction ------------------------------------------------------------------

def ewma(history: Sequence[float], alpha: float) -> float:
    it = iter(history)
    s = float(next(it))
    for v in it:
        s = alpha * v + (1.0 - alpha) * s
    return s


def harmonic_mean(values: Sequence[float]) -> float:
    if any(v <= 0 for v in values):
        return 0.0
    return len(values) / sum(1.0 / v for v in values)


def fit(kind: PredictorKind, history: Sequence[float]):
    """Fitted state for predictors that need one (AR, MLP); ``None`` otherwise."""
    if isinstance(kind, AR):
        _check_history(kind, history)
        return fit_ar(history, kind.p, kind.d)
    if isinstance(kind, MLP):
        return train_mlp(history, kind)
    return None


def _check_history(kind: PredictorKind, history: Sequence[float]) -> None:
    if len(history) < kind.min_history:
        raise InsufficientHistory(
            f"{type(kind).__name__} needs >= {kind.min_history} points, got {len(history)}"
        )


def predict(kind: PredictorKind, history: Sequence[float], horizon: int, fitted=None) -> list[float]:
    """Forecast ``horizon`` future values (each >= 0); fits on demand if ``fitted`` is None."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    history = [float(v) for v in history]
    _check_history(kind, history)
    if isinstance(kind, EWMA):
        return [max(ewma(history, kind.alpha), 0.0)] * horizon
    if isinstance(kind, HarmonicMean):
        return [max(harmonic_mean(history[-kind.k:]), 0.0)] * horizon
    if fitted is None:
        fitted = fit(kind, history)
    if isinstance(kind, AR):
        return ar_forecast(fitted, history, horizon)
    return mlp_forecast(fitted, history, horizon)


# -- forecasts and accuracy --------------------------------------------------------

@dataclass(frozen=True)
class Forecast:
    origin_t: float
    horizon: int
    step: float
    bandwidth_hat: tuple[float, ...]  # bits/s
    rtt_hat: tuple[float, ...]  # ms

    def __post_init__(self):
        if len(self.bandwidth_hat) != self.horizon or len(self.rtt_hat) != self.horizon:
            raise ValueError("forecast lengths must equal the horizon")
        if min(self.bandwidth_hat) < 0 or min(self.rtt_hat) < 0:
            raise ValueError("forecast values must be >= 0")


def forecast_network(
    twin: Telemetry,
    kind: PredictorKind,
    horizon: int,
    step: float,
    rtt_kind: PredictorKind | None = None,
) -> Forecast:
    """Forecast throughput and rtt independently; ``rtt_kind`` defaults to ``kind``."""
    bw = predict(kind, twin.throughputs(), horizon)
    rtt = predict(rtt_kind or kind, twin.rtts(), horizon)
    return Forecast(
        twin.newest_t, horizon, step,
        tuple(max(v, 0.0) for v in bw), tuple(max(v, 0.0) for v in rtt),
    )


@dataclass(frozen=True)
class FitReport:
    mae: float
    mape: float
    n: int


def forecast_error(predicted: Sequence[float], actual: Sequence[float]) -> FitReport:
    if len(predicted) != len(actual):
        raise ValueError(f"length mismatch: {len(predicted)} predictions vs {len(actual)} actuals")
    if not predicted:
        raise ValueError("forecast_error needs at least one point")
    abs_err = [abs(p - a) for p, a in zip(predicted, actual)]
    rel = [e / abs(a) for e, a in zip(abs_err, actual) if a != 0]
    return FitReport(
        sum(abs_err) / len(abs_err),
        sum(rel) / len(rel) if rel else 0.0,
        len(abs_err),
    )


@dataclass
class DigitalTwin:
    """Per-session twin: telemetry plus one-step accuracy bookkeeping."""

    bandwidth_kind: PredictorKind = field(default_factory=lambda: HarmonicMean(5))
    rtt_kind: PredictorKind = field(default_factory=lambda: EWMA(0.3))
    capacity: int = 120
    telemetry: Telemetry = None
    bw_pred: list = field(default_factory=list)
    bw_actual: list = field(default_factory=list)
    rtt_pred: list = field(default_factory=list)
    rtt_actual: list = field(default_factory=list)
    _pending: Forecast | None = None

    def __post_init__(self):
        if self.telemetry is None:
            self.telemetry = Telemetry(self.capacity)

    def observe(self, sample: NetworkSample, throughput: float) -> None:
        if self._pending is not None:
            self.bw_pred.append(self._pending.bandwidth_hat[0])
            self.bw_actual.append(throughput)
            self.rtt_pred.append(self._pending.rtt_hat[0])
            self.rtt_actual.append(sample.rtt)
            self._pending = None
        self.telemetry.observe(sample, throughput)

    def forecast(self, horizon: int, step: float) -> Forecast:
        """Forecast and remember it for scoring against the next observation.

        While the history is shorter than a predictor needs, a harmonic mean
        (bandwidth) or EWMA (rtt) over everything seen so far stands in.
        """
        n = len(self.telemetry)
        if n == 0:
            raise InsufficientHistory("telemetry is empty")
        bw_kind = self.bandwidth_kind if n >= self.bandwidth_kind.min_history else HarmonicMean(n)
        rtt_kind = self.rtt_kind if n >= self.rtt_kind.min_history else EWMA(0.3)
        fc = forecast_network(self.telemetry, bw_kind, horizon, step, rtt_kind)
        self._pending = fc
        return fc

    def reports(self) -> list[FitReport]:
        """``[bandwidth, rtt]`` accuracy; empty if nothing was scored."""
        if not self.bw_pred:
            return []
        return [
            forecast_error(self.bw_pred, self.bw_actual),
            forecast_error(self.rtt_pred, self.rtt_actual),
        ]


@dataclass(frozen=True)
class TwinConfig:
    bandwidth: PredictorKind = HarmonicMean(5)
    rtt: PredictorKind = EWMA(0.3)
    capacity: int = 120

    def build(self) -> DigitalTwin:
        return DigitalTwin(self.bandwidth, self.rtt, self.capacity)
