"""Domain types shared by clustering, evaluation and attribute labelling."""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Mapping

from .geometry import Point2, Quadrilateral, centroid


@dataclass(frozen=True)
class TemporalRange:
    """Inclusive frame interval."""

    start: int
    end: int

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"range start {self.start} after end {self.end}")

    def __len__(self) -> int:
        return self.end - self.start + 1

    def __contains__(self, frame: int) -> bool:
        return self.start <= frame <= self.end

    def intersection(self, other: "TemporalRange") -> "TemporalRange | None":
        s, e = max(self.start, other.start), min(self.end, other.end)
        return TemporalRange(s, e) if s <= e else None


@dataclass(frozen=True)
class TextPoint:
    """One detected text instance reduced to a point in (x, y, frame) space."""

    frame: int
    quad: Quadrilateral
    confidence: float
    interpolated: bool = False
    center: Point2 = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.frame < 0:
            raise ValueError(f"negative frame index {self.frame}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        object.__setattr__(self, "center", centroid(self.quad))


@dataclass(frozen=True)
class Member:
    quad: Quadrilateral
    confidence: float = 1.0
    interpolated: bool = False


@dataclass(frozen=True)
class Track:
    """A text identity over its contiguous lifetime.

    The temporal range and score are derived from the members, so the
    range always spans exactly the first to last member frame.
    """

    id: int
    members: Mapping[int, Member]
    attrs: Mapping[str, Any] | None = None

    def __post_init__(self):
        if not self.members:
            raise ValueError(f"track {self.id} has no members")
        ordered = dict(sorted(self.members.items()))
        object.__setattr__(self, "members", MappingProxyType(ordered))

    @property
    def range(self) -> TemporalRange:
        frames = list(self.members)
        return TemporalRange(frames[0], frames[-1])

    @property
    def score(self) -> float:
        confs = [m.confidence for m in self.members.values()]
        return sum(confs) / len(confs)

    @property
    def lifecycle(self) -> int:
        return len(self.range)

    def quad_at(self, frame: int) -> Quadrilateral | None:
        m = self.members.get(frame)
        return m.quad if m is not None else None

    def points(self) -> list[TextPoint]:
        return [
            TextPoint(f, m.quad, m.confidence, m.interpolated)
            for f, m in self.members.items()
        ]


@dataclass(frozen=True)
class VideoDetections:
    video_id: str
    frame_count: int
    frames: tuple[tuple[int, tuple[tuple[Quadrilateral, float], ...]], ...] = ()

    def __post_init__(self):
        prev = -1
        for f, _ in self.frames:
            if f <= prev:
                raise ValueError(f"frame indices not strictly increasing at {f}")
            if f >= self.frame_count:
                raise ValueError(f"frame {f} beyond frame_count {self.frame_count}")
            prev = f

    def points(self) -> list[TextPoint]:
        return [TextPoint(f, q, c) for f, dets in self.frames for q, c in dets]


@dataclass(frozen=True)
class VideoGroundTruth:
    """A set of tracks for one video; used for annotations and predictions alike."""

    video_id: str
    tracks: tuple[Track, ...] = ()

    def __post_init__(self):
        ids = [t.id for t in self.tracks]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate track ids in video {self.video_id!r}")


NOISE_RULES = ("and", "or")


@dataclass(frozen=True)
class ClusterConfig:
    eps: int = 3
    tau_d: float = 0.7
    tau_l: int = 3
    tau_c: float = 0.3
    # "and": delete a cluster only when short-lived AND low-confidence
    noise_rule: str = "and"

    def __post_init__(self):
        if int(self.eps) != self.eps or self.eps < 1:
            raise ValueError("eps must be an integer >= 1")
        if not 0.0 <= self.tau_d <= 1.0:
            raise ValueError("tau_d must lie in [0, 1]")
        if int(self.tau_l) != self.tau_l or self.tau_l < 1:
            raise ValueError("tau_l must be an integer >= 1")
        if not 0.0 <= self.tau_c <= 1.0:
            raise ValueError("tau_c must lie in [0, 1]")
        if self.noise_rule not in NOISE_RULES:
            raise ValueError(f"noise_rule must be one of {NOISE_RULES}")


SPATIAL_MODES = ("mean", "enclosing")


@dataclass(frozen=True)
class MatchConfig:
    theta_l: float = 0.5
    theta_r: float = 0.5
    alpha: float = 0.5
    spatial_mode: str = "mean"

    def __post_init__(self):
        for name in ("theta_l", "theta_r", "alpha"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.spatial_mode not in SPATIAL_MODES:
            raise ValueError(f"spatial_mode must be one of {SPATIAL_MODES}")
