"""Per-instance attribute labels: density, scale class and lifecycle class."""
from __future__ import annotations

from collections import deque
from typing import Any, Sequence

from .geometry import Quadrilateral, convex_intersects, expand, short_side
from .model import Track, VideoGroundTruth

DENSITY_EXPANSION = 0.1
SMALL_MAX = 32.0  # short side below this is small
LARGE_MIN = 64.0  # short side above this is large
SHORT_LIFE_MAX = 30  # lifecycle below this is short
LONG_LIFE_MIN = 120  # lifecycle above this is long


def frame_density(quads: Sequence[Quadrilateral]) -> list[int]:
    """Connected-component size of each box in one frame.

    Boxes i and j are linked when the expanded i touches the original j or
    the expanded j touches the original i.
    """
    n = len(quads)
    grown = [expand(q, DENSITY_EXPANSION) for q in quads]
    adj: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if convex_intersects(grown[i], quads[j]) or convex_intersects(grown[j], quads[i]):
                adj[i].append(j)
                adj[j].append(i)

    comp = [-1] * n
    sizes: list[int] = []
    for s in range(n):
        if comp[s] >= 0:
            continue
        k = len(sizes)
        comp[s] = k
        queue = deque([s])
        size = 0
        while queue:
            u = queue.popleft()
            size += 1
            for v in adj[u]:
                if comp[v] < 0:
                    comp[v] = k
                    queue.append(v)
        sizes.append(size)
    return [sizes[c] for c in comp]


def scale_class(q: Quadrilateral) -> str:
    s = short_side(q)
    if s < SMALL_MAX:
        return "small"
    if s <= LARGE_MIN:
        return "medium"
    return "large"


def lifecycle_class_of(frames: int) -> str:
    if frames < SHORT_LIFE_MAX:
        return "short"
    if frames <= LONG_LIFE_MIN:
        return "normal"
    return "long"


def lifecycle_class(t: Track) -> str:
    return lifecycle_class_of(t.lifecycle)


def annotate_video(gt: VideoGroundTruth) -> VideoGroundTruth:
    """Return a copy of ``gt`` with an ``attrs`` object on every track.

    ``density`` and ``scale`` are lists aligned with the track's boxes in
    frame order; ``lifecycle`` is a single class.
    """
    by_frame: dict[int, list[tuple[int, Quadrilateral]]] = {}
    for t in gt.tracks:
        for f, m in t.members.items():
            by_frame.setdefault(f, []).append((t.id, m.quad))
    density: dict[tuple[int, int], int] = {}
    for f, items in by_frame.items():
        for (tid, _), d in zip(items, frame_density([q for _, q in items])):
            density[(tid, f)] = d

    tracks = []
    for t in gt.tracks:
        attrs: dict[str, Any] = dict(t.attrs or {})
        attrs["lifecycle"] = lifecycle_class(t)
        attrs["density"] = [density[(t.id, f)] for f in t.members]
        attrs["scale"] = [scale_class(m.quad) for m in t.members.values()]
        tracks.append(Track(t.id, t.members, attrs))
    return VideoGroundTruth(gt.video_id, tuple(tracks))


def attribute_rows(gt: VideoGroundTruth) -> list[tuple[int, int, int, str, str]]:
    """Rows ``(track_id, frame, density, scale, lifecycle)`` in track/frame order."""
    annotated = annotate_video(gt)
    rows = []
    for t in sorted(annotated.tracks, key=lambda t: t.id):
        life = t.attrs["lifecycle"]
        for f, d, s in zip(t.members, t.attrs["density"], t.attrs["scale"]):
            rows.append((t.id, f, d, s, life))
    return rows
