"""JSON file formats: detections, tracks/ground truth, scorecards.

Input documents are validated with pydantic models and converted into the
frozen domain types of :mod:`stvstd.model`. Output goes through a small
deterministic emitter so that numbers never use exponent notation and
repeated runs produce byte-identical files.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Annotated, Any, Iterable, Optional

from pydantic import (
    AfterValidator,
    BaseModel,
    ConfigDict,
    Field,
    StrictInt,
    ValidationError,
    model_validator,
)

from .errors import ParseError, SchemaError
from .geometry import Quadrilateral, normalize
from .model import Member, Track, VideoDetections, VideoGroundTruth

Vertex = Annotated[list[float], Field(min_length=2, max_length=2)]
QuadField = Annotated[list[Vertex], Field(min_length=4, max_length=4), AfterValidator(normalize)]
Unit = Annotated[float, Field(ge=0.0, le=1.0, allow_inf_nan=False)]
FrameIndex = Annotated[StrictInt, Field(ge=0)]


class _Doc(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DetectionIn(_Doc):
    quad: QuadField
    score: Unit


class FrameIn(_Doc):
    frame: FrameIndex
    detections: list[DetectionIn] = []


class DetectionsDoc(_Doc):
    video_id: str
    frame_count: FrameIndex
    frames: list[FrameIn] = []

    @model_validator(mode="after")
    def _frames_ordered(self):
        prev = -1
        for i, f in enumerate(self.frames):
            if f.frame <= prev:
                raise ValueError(f"frames[{i}].frame: indices must be strictly increasing")
            if f.frame >= self.frame_count:
                raise ValueError(f"frames[{i}].frame: {f.frame} is not below frame_count")
            prev = f.frame
        return self


class BoxIn(_Doc):
    frame: FrameIndex
    quad: QuadField
    conf: Unit = 1.0


class TrackIn(_Doc):
    id: StrictInt
    start: FrameIndex
    end: FrameIndex
    score: Optional[Unit] = None
    boxes: list[BoxIn] = Field(min_length=1)
    attrs: Optional[dict[str, Any]] = None

    @model_validator(mode="after")
    def _range_matches_boxes(self):
        prev = -1
        for i, b in enumerate(self.boxes):
            if b.frame <= prev:
                raise ValueError(f"boxes[{i}].frame: frames must be strictly increasing")
            if not self.start <= b.frame <= self.end:
                raise ValueError(
                    f"boxes[{i}].frame: {b.frame} outside declared range [{self.start}, {self.end}]"
                )
            prev = b.frame
        if self.boxes[0].frame != self.start or self.boxes[-1].frame != self.end:
            raise ValueError("start/end must equal the first and last box frames")
        if self.score is not None:
            mean = sum(b.conf for b in self.boxes) / len(self.boxes)
            if abs(mean - self.score) > 1e-5:
                raise ValueError(f"score {self.score} differs from mean box conf {mean:.6f}")
        return self


class TracksDoc(_Doc):
    video_id: str
    tracks: list[TrackIn] = []

    @model_validator(mode="after")
    def _unique_ids(self):
        seen: set[int] = set()
        for i, t in enumerate(self.tracks):
            if t.id in seen:
                raise ValueError(f"tracks[{i}].id: duplicate track id {t.id}")
            seen.add(t.id)
        return self


def _loc(loc: tuple) -> str:
    out = ""
    for part in loc:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out


def _load(data: bytes | str, doc_type: type[_Doc]):
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"input is not UTF-8: {e}") from None
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
    try:
        return doc_type.model_validate(raw)
    except ValidationError as e:
        msgs = []
        for err in e.errors():
            where = _loc(err["loc"]) or "<document>"
            msgs.append(f"{where}: {err['msg']}")
        raise SchemaError("; ".join(msgs)) from None


def parse_detections(data: bytes | str) -> VideoDetections:
    doc: DetectionsDoc = _load(data, DetectionsDoc)
    frames = tuple(
        (f.frame, tuple((d.quad, d.score) for d in f.detections)) for f in doc.frames
    )
    return VideoDetections(doc.video_id, doc.frame_count, frames)


def parse_ground_truth(data: bytes | str) -> VideoGroundTruth:
    doc: TracksDoc = _load(data, TracksDoc)
    tracks = tuple(
        Track(t.id, {b.frame: Member(b.quad, b.conf) for b in t.boxes}, t.attrs)
        for t in doc.tracks
    )
    return VideoGroundTruth(doc.video_id, tracks)


def load_detections(path: str | Path) -> VideoDetections:
    return parse_detections(Path(path).read_bytes())


def load_ground_truth(path: str | Path) -> VideoGroundTruth:
    return parse_ground_truth(Path(path).read_bytes())


# -- output ---------------------------------------------------------------


def format_number(v: float, digits: int = 6) -> str:
    if isinstance(v, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(v, int):
        return str(v)
    if not math.isfinite(v):
        raise ValueError(f"cannot serialize non-finite number {v}")
    s = f"{v:.{digits}f}"
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def dumps(obj: Any, digits: int = 6, width: int = 100) -> str:
    """Deterministic JSON text with fixed-point numbers."""
    return _emit(obj, digits, width, 0) + "\n"


def _inline(obj: Any, digits: int) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, float)):
        return format_number(obj, digits)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_inline(v, digits)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_inline(v, digits) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(obj: Any, digits: int, width: int, level: int) -> str:
    flat = _inline(obj, digits)
    if len(flat) + 2 * level <= width or not isinstance(obj, (dict, list, tuple)) or not obj:
        return flat
    pad = "  " * (level + 1)
    if isinstance(obj, dict):
        body = ",\n".join(
            f"{pad}{json.dumps(str(k))}: {_emit(v, digits, width, level + 1)}" for k, v in obj.items()
        )
        return "{\n" + body + "\n" + "  " * level + "}"
    body = ",\n".join(pad + _emit(v, digits, width, level + 1) for v in obj)
    return "[\n" + body + "\n" + "  " * level + "]"


def _quad_out(q: Quadrilateral) -> list[list[float]]:
    return q.as_list()


def track_to_dict(t: Track) -> dict[str, Any]:
    r = t.range
    d: dict[str, Any] = {
        "id": t.id,
        "start": r.start,
        "end": r.end,
        "score": t.score,
        "boxes": [
            {"frame": f, "quad": _quad_out(m.quad), "conf": m.confidence}
            for f, m in t.members.items()
        ],
    }
    if t.attrs is not None:
        d["attrs"] = dict(t.attrs)
    return d


def serialize_tracks(tracks: Iterable[Track], video_id: str) -> bytes:
    doc = {
        "video_id": video_id,
        "tracks": [track_to_dict(t) for t in sorted(tracks, key=lambda t: t.id)],
    }
    return dumps(doc).encode("utf-8")


def serialize_ground_truth(gt: VideoGroundTruth) -> bytes:
    return serialize_tracks(gt.tracks, gt.video_id)


def serialize_detections(dets: VideoDetections) -> bytes:
    doc = {
        "video_id": dets.video_id,
        "frame_count": dets.frame_count,
        "frames": [
            {
                "frame": f,
                "detections": [{"quad": _quad_out(q), "score": c} for q, c in items],
            }
            for f, items in dets.frames
        ],
    }
    return dumps(doc).encode("utf-8")
