"""Content, device and session configuration types shared by ``sim`` and ``control``."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Representation:
    bitrate: float  # bits/s
    width: int
    height: int
    label: str = ""

    def __post_init__(self):
        if self.bitrate <= 0:
            raise ValueError(f"bitrate must be > 0, got {self.bitrate}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("resolution must be positive")


@dataclass(frozen=True)
class BitrateLadder:
    reps: tuple[Representation, ...]

    def __post_init__(self):
        reps = tuple(self.reps)
        object.__setattr__(self, "reps", reps)
        if not reps:
            raise ValueError("ladder must have at least one rung")
        for lo, hi in zip(reps, reps[1:]):
            if hi.bitrate <= lo.bitrate:
                raise ValueError("ladder bitrates must be strictly increasing")
            if hi.width < lo.width or hi.height < lo.height:
                raise ValueError("ladder resolutions must be non-decreasing with bitrate")

    def __len__(self):
        return len(self.reps)

    def __getitem__(self, i) -> Representation:
        return self.reps[i]

    @property
    def bitrates(self) -> tuple[float, ...]:
        return tuple(r.bitrate for r in self.reps)

    def utilities(self) -> tuple[float, ...]:
        lo, hi = self.reps[0].bitrate, self.reps[-1].bitrate
        if lo == hi:
            return (1.0,) * len(self.reps)
        return tuple(math.log(r.bitrate / lo) / math.log(hi / lo) for r in self.reps)

    def filtered(self, device: "DeviceProfile") -> "BitrateLadder":
        """Rungs the device can display; raises if none remain."""
        reps = tuple(r for r in self.reps if device.supports(r))
        if not reps:
            raise ValueError("no ladder rung fits the device resolution limits")
        return BitrateLadder(reps)


def default_ladder() -> BitrateLadder:
    return BitrateLadder((
        Representation(0.4e6, 640, 360, "360p"),
        Representation(1.0e6, 854, 480, "480p"),
        Representation(2.5e6, 1280, 720, "720p"),
        Representation(5.0e6, 1920, 1080, "1080p"),
        Representation(8.0e6, 2560, 1440, "1440p"),
    ))


@dataclass(frozen=True)
class DeviceProfile:
    max_width: int = 2560
    max_height: int = 1440
    l_max: float = 500.0  # latency tolerance, ms

    def __post_init__(self):
        if self.max_width <= 0 or self.max_height <= 0:
            raise ValueError("device dimensions must be positive")
        if self.l_max <= 0:
            raise ValueError("l_max must be > 0")

    def supports(self, rep: Representation) -> bool:
        return rep.width <= self.max_width and rep.height <= self.max_height


@dataclass(frozen=True)
class SessionConfig:
    chunk_duration: float = 2.0
    content_duration: float = 280.0
    startup_threshold: float = 4.0
    max_buffer: float = 30.0
    rebuffer_resume_threshold: float = 4.0
    stall_timeout: float = 60.0

    def __post_init__(self):
        if not 0 < self.chunk_duration <= self.startup_threshold <= self.max_buffer:
            raise ValueError("need 0 < chunk_duration <= startup_threshold <= max_buffer")
        n = self.content_duration / self.chunk_duration
        if self.content_duration <= 0 or abs(n - round(n)) > 1e-9:
            raise ValueError("content_duration must be a positive multiple of chunk_duration")
        if self.rebuffer_resume_threshold > self.max_buffer:
            raise ValueError("rebuffer_resume_threshold must be <= max_buffer")
        if self.stall_timeout <= 0:
            raise ValueError("stall_timeout must be > 0")

    @property
    def n_chunks(self) -> int:
        return int(round(self.content_duration / self.chunk_duration))
