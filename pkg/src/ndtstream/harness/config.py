"""Experiment configuration: a flat ``key = value`` text format with ``#`` comments.

Every key is optional; omitted keys take the defaults shown by
``ndtstream run --help`` and in the README. Unknown keys are errors so that
typos do not silently fall back to defaults.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Mapping, Optional

from ..control import (
    Annealing,
    AnnealingParams,
    BufferBased,
    ControllerKind,
    Exhaustive,
    PredictiveMpc,
    QLearning,
    QParams,
    RateBased,
)
from ..media import BitrateLadder, DeviceProfile, Representation, SessionConfig, default_ladder
from ..netmodel import ScenarioKind
from ..qoe import QoeWeights
from ..twin import TwinConfig, format_predictor, parse_predictor

SEED_ENV = "NDTSTREAM_SEED"
MAX_SEED = 2**64 - 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    scenarios: tuple = tuple(ScenarioKind)
    controllers: tuple = (RateBased(), PredictiveMpc())
    seeds: tuple = tuple(range(1, 11))
    ladder: BitrateLadder = field(default_factory=default_ladder)
    device: DeviceProfile = DeviceProfile()
    session: SessionConfig = SessionConfig()
    weights: QoeWeights = QoeWeights()
    twin: TwinConfig = TwinConfig()
    trace_duration: float = 300.0
    out_path: Optional[str] = None
    out_format: str = "json"

    def __post_init__(self):
        for name in ("scenarios", "controllers", "seeds"):
            val = tuple(getattr(self, name))
            object.__setattr__(self, name, val)
            if not val:
                raise ConfigError(f"{name} must not be empty")
        for s in self.seeds:
            if not (isinstance(s, int) and 0 <= s <= MAX_SEED):
                raise ConfigError(f"seed {s!r} is not a 64-bit unsigned integer")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("duplicate seeds")
        names = [c.name for c in self.controllers]
        if len(set(names)) != len(names):
            raise ConfigError(f"controller kinds must be distinct, got {names}")
        if len(set(self.scenarios)) != len(self.scenarios):
            raise ConfigError("duplicate scenarios")
        if self.trace_duration <= 0:
            raise ConfigError("trace.duration_s must be > 0")
        if self.out_format not in ("csv", "json"):
            raise ConfigError(f"output.format must be csv or json, got {self.out_format!r}")
        try:
            self.ladder.filtered(self.device)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def controller(self, name: str) -> ControllerKind:
        for c in self.controllers:
            if c.name == name:
                return c
        raise KeyError(name)


def parse_seeds(text: str) -> tuple[int, ...]:
    """``1..10``, ``1,2,5`` or a mix such as ``1..3,7``."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                lo, hi = (int(x) for x in part.split(".."))
                if hi < lo:
                    raise ConfigError(f"empty seed range {part!r}")
                seeds.extend(range(lo, hi + 1))
            else:
                seeds.append(int(part))
        except ValueError:
            raise ConfigError(f"bad seed list entry {part!r}") from None
    if not seeds:
        raise ConfigError(f"empty seed list {text!r}")
    return tuple(seeds)


def parse_text(text: str) -> dict[str, str]:
    """Flat ``key = value`` pairs; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: missing key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _parse_ladder(text: str) -> BitrateLadder:
    # kbps:WxH[:label], comma separated
    reps = []
    for item in text.split(","):
        bits = [p.strip() for p in item.strip().split(":")]
        try:
            w, h = (int(v) for v in bits[1].lower().split("x"))
            label = bits[2] if len(bits) > 2 else f"{h}p"
            reps.append(Representation(float(bits[0]) * 1e3, w, h, label))
        except (IndexError, ValueError) as exc:
            raise ConfigError(f"bad ladder rung {item.strip()!r}: {exc}") from None
    try:
        return BitrateLadder(tuple(reps))
    except ValueError as exc:
        raise ConfigError(f"ladder: {exc}") from None


def _format_ladder(ladder: BitrateLadder) -> str:
    return ", ".join(f"{r.bitrate / 1e3:g}:{r.width}x{r.height}:{r.label}" for r in ladder.reps)


def _bool(text: str) -> bool:
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (converter, default)
_SCALARS = {
    "controller.h": (int, 5),
    "controller.safety": (float, 0.9),
    "controller.search": (str, "exhaustive"),
    "controller.adaptive_buffering": (_bool, True),
    "controller.reservoir_s": (float, 5.0),
    "controller.cushion_s": (float, 20.0),
    "annealing.iters": (int, 2000),
    "annealing.t0": (float, 1.0),
    "annealing.cooling": (float, 0.995),
    "annealing.seed": (int, 0),
    "q.alpha": (float, 0.1),
    "q.gamma": (float, 0.9),
    "q.epsilon": (float, 0.1),
    "q.buffer_bins": (int, 6),
    "q.bw_bins": (int, 6),
    "q.episodes": (int, 30),
    "q.seed": (int, 0),
    "qoe.w_r": (float, 1.0),
    "qoe.w_d": (float, 0.2),
    "qoe.w_b": (float, 0.6),
    "qoe.w_s": (float, 0.2),
    "qoe.d_ref_s": (float, 10.0),
    "qoe.b_ref_s": (float, 10.0),
    "twin.capacity": (int, 120),
    "session.chunk_s": (float, 2.0),
    "session.content_s": (float, 280.0),
    "session.startup_s": (float, 4.0),
    "session.max_buffer_s": (float, 30.0),
    "session.resume_s": (float, 4.0),
    "session.stall_timeout_s": (float, 60.0),
    "device.max_width": (int, 2560),
    "device.max_height": (int, 1440),
    "device.l_max_ms": (float, 500.0),
    "trace.duration_s": (float, 300.0),
    "output.format": (str, "json"),
}
_OTHER = ("scenarios", "seeds", "controller.kind", "twin.bandwidth", "twin.rtt", "ladder",
          "output.path")
KNOWN_KEYS = frozenset(_SCALARS) | frozenset(_OTHER)


def _controllers(names: str, v: dict) -> tuple:
    search = v["controller.search"].lower()
    if search == "exhaustive":
        search_kind = Exhaustive()
    elif search == "annealing":
        search_kind = Annealing(AnnealingParams(
            v["annealing.iters"], v["annealing.t0"], v["annealing.cooling"], v["annealing.seed"]))
    else:
        raise ConfigError(f"controller.search must be exhaustive or annealing, got {search!r}")
    out = []
    for name in (n.strip() for n in names.split(",") if n.strip()):
        key = name.lower().replace("_", "").replace("-", "")
        if key in ("ratebased", "rate"):
            out.append(RateBased(v["controller.safety"]))
        elif key in ("bufferbased", "buffer"):
            out.append(BufferBased(v["controller.reservoir_s"], v["controller.cushion_s"]))
        elif key in ("predictivempc", "mpc"):
            out.append(PredictiveMpc(v["controller.h"], v["controller.safety"], search_kind,
                                     v["controller.adaptive_buffering"]))
        elif key in ("qlearning", "q"):
            out.append(QLearning(QParams(
                v["q.alpha"], v["q.gamma"], v["q.epsilon"], v["q.buffer_bins"],
                v["q.bw_bins"], v["q.episodes"], v["q.seed"])))
        else:
            raise ConfigError(f"unknown controller kind {name!r}")
    return tuple(out)


def from_mapping(raw: Mapping[str, str], env: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    """Build a validated config from parsed key/value strings.

    ``env`` defaults to ``os.environ``; its ``NDTSTREAM_SEED`` replaces the seed list.
    """
    env = os.environ if env is None else env
    unknown = sorted(set(raw) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    v = {}
    for key, (conv, default) in _SCALARS.items():
        if key in raw:
            try:
                v[key] = conv(raw[key])
            except ValueError:
                raise ConfigError(f"{key}: cannot parse {raw[key]!r}") from None
        else:
            v[key] = default
    try:
        scenarios = (tuple(ScenarioKind.parse(s) for s in raw["scenarios"].split(",") if s.strip())
                     if "scenarios" in raw else tuple(ScenarioKind))
        seeds = parse_seeds(raw.get("seeds", "1..10"))
        if env.get(SEED_ENV):
            seeds = parse_seeds(env[SEED_ENV])
        controllers = _controllers(raw.get("controller.kind", "RateBased, PredictiveMpc"), v)
        twin = TwinConfig(
            parse_predictor(raw.get("twin.bandwidth", "hm:5")),
            parse_predictor(raw.get("twin.rtt", "ewma:0.3")),
            v["twin.capacity"],
        )
        return ExperimentConfig(
            scenarios=scenarios,
            controllers=controllers,
            seeds=seeds,
            ladder=_parse_ladder(raw["ladder"]) if "ladder" in raw else default_ladder(),
            device=DeviceProfile(v["device.max_width"], v["device.max_height"], v["device.l_max_ms"]),
            session=SessionConfig(
                v["session.chunk_s"], v["session.content_s"], v["session.startup_s"],
                v["session.max_buffer_s"], v["session.resume_s"], v["session.stall_timeout_s"]),
            weights=QoeWeights(v["qoe.w_r"], v["qoe.w_d"], v["qoe.w_b"], v["qoe.w_s"],
                               v["qoe.d_ref_s"], v["qoe.b_ref_s"]),
            twin=twin,
            trace_duration=v["trace.duration_s"],
            out_path=raw.get("output.path") or None,
            out_format=v["output.format"].lower(),
        )
    except ConfigError:
        raise
    except ValueError as exc:  # nested invariants
        raise ConfigError(str(exc)) from None


def parse_config(text: str, env: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    return from_mapping(parse_text(text), env)


def load_config(path, env: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    """Read and validate a config file. I/O problems surface as ``OSError``."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, env)


def echo(cfg: ExperimentConfig) -> dict[str, str]:
    """Flat key/value view of ``cfg``; feeding it back to :func:`from_mapping` rebuilds ``cfg``."""
    out = {
        "scenarios": ", ".join(s.value for s in cfg.scenarios),
        "seeds": ", ".join(str(s) for s in cfg.seeds),
        "controller.kind": ", ".join(c.name for c in cfg.controllers),
        "twin.bandwidth": format_predictor(cfg.twin.bandwidth),
        "twin.rtt": format_predictor(cfg.twin.rtt),
        "twin.capacity": str(cfg.twin.capacity),
        "ladder": _format_ladder(cfg.ladder),
        "qoe.w_r": repr(cfg.weights.w_r),
        "qoe.w_d": repr(cfg.weights.w_d),
        "qoe.w_b": repr(cfg.weights.w_b),
        "qoe.w_s": repr(cfg.weights.w_s),
        "qoe.d_ref_s": repr(cfg.weights.d_ref),
        "qoe.b_ref_s": repr(cfg.weights.b_ref),
        "session.chunk_s": repr(cfg.session.chunk_duration),
        "session.content_s": repr(cfg.session.content_duration),
        "session.startup_s": repr(cfg.session.startup_threshold),
        "session.max_buffer_s": repr(cfg.session.max_buffer),
        "session.resume_s": repr(cfg.session.rebuffer_resume_threshold),
        "session.stall_timeout_s": repr(cfg.session.stall_timeout),
        "device.max_width": str(cfg.device.max_width),
        "device.max_height": str(cfg.device.max_height),
        "device.l_max_ms": repr(cfg.device.l_max),
        "trace.duration_s": repr(cfg.trace_duration),
        "output.format": cfg.out_format,
    }
    for c in cfg.controllers:
        if isinstance(c, (RateBased, PredictiveMpc)):
            out["controller.safety"] = repr(c.safety)
        if isinstance(c, BufferBased):
            out["controller.reservoir_s"] = repr(c.reservoir)
            out["controller.cushion_s"] = repr(c.cushion)
        if isinstance(c, PredictiveMpc):
            out["controller.h"] = str(c.horizon)
            out["controller.adaptive_buffering"] = str(c.adaptive_buffering).lower()
            if isinstance(c.search, Annealing):
                p = c.search.params
                out.update({"controller.search": "annealing", "annealing.iters": str(p.iters),
                            "annealing.t0": repr(p.t0), "annealing.cooling": repr(p.cooling),
                            "annealing.seed": str(p.seed)})
            else:
                out["controller.search"] = "exhaustive"
        if isinstance(c, QLearning):
            p = c.params
            out.update({"q.alpha": repr(p.alpha), "q.gamma": repr(p.gamma),
                        "q.epsilon": repr(p.epsilon), "q.buffer_bins": str(p.buffer_bins),
                        "q.bw_bins": str(p.bw_bins), "q.episodes": str(p.episodes),
                        "q.seed": str(p.seed)})
    if cfg.out_path:
        out["output.path"] = cfg.out_path
    return out


def dumps(cfg: ExperimentConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in sorted(echo(cfg).items()))
