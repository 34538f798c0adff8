"""Seeded synthetic scenarios and brute-force reference oracles.

Scenarios place each ground-truth track in its own cell of a grid laid
over the arena, so distinct tracks never overlap. Inside its cell a
track's box follows a bounded random walk. Detections are derived from
the ground truth by vertex jitter, dropout, duplicates and spurious
low-confidence boxes. All randomness comes from one ``numpy`` PCG64
stream seeded by ``ScenarioParams.seed``.

The oracles (Monte-Carlo IoU, exhaustive matching, union-find density)
deliberately avoid the code paths they are used to check.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

import numpy as np
from shapely.geometry import Polygon

from .errors import GenerationError, InvalidGeometryError
from .evaluation import eligible_pairs
from .geometry import Quadrilateral, normalize
from .model import MatchConfig, Member, Track, VideoDetections, VideoGroundTruth

GRID_GAP = 2.0
MAX_JITTER_TRIES = 20


@dataclass(frozen=True)
class ScenarioParams:
    seed: int = 0
    n_tracks: int = 5
    frame_count: int = 100
    arena_width: float = 1280.0
    arena_height: float = 720.0
    box_min: float = 20.0
    box_max: float = 60.0
    max_angle: float = 0.2  # radians
    min_lifetime: int = 5
    motion_sigma: float = 1.0
    jitter_sigma: float = 0.5
    dropout: float = 0.05
    fp_rate: float = 0.2  # expected spurious boxes per frame
    dup_prob: float = 0.02
    true_conf_min: float = 0.5
    true_conf_max: float = 1.0
    false_conf_min: float = 0.05
    false_conf_max: float = 0.25
    video_id: str = "synth"

    def __post_init__(self):
        for name in ("dropout", "dup_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for lo, hi in (("true_conf_min", "true_conf_max"), ("false_conf_min", "false_conf_max")):
            a, b = getattr(self, lo), getattr(self, hi)
            if not 0.0 <= a <= b <= 1.0:
                raise ValueError(f"need 0 <= {lo} <= {hi} <= 1")
        if not 0 < self.box_min <= self.box_max:
            raise ValueError("need 0 < box_min <= box_max")
        if self.n_tracks < 0 or self.frame_count < 1 or self.min_lifetime < 1:
            raise ValueError("n_tracks >= 0, frame_count >= 1 and min_lifetime >= 1 required")
        if min(self.motion_sigma, self.jitter_sigma, self.fp_rate, self.max_angle) < 0:
            raise ValueError("noise magnitudes must be non-negative")
        if self.box_max * math.sqrt(2) + 2 * GRID_GAP > min(self.arena_width, self.arena_height):
            raise ValueError("arena too small for the largest box")

    def to_dict(self) -> dict:
        return asdict(self)


def _rect_quad(cx: float, cy: float, w: float, h: float, angle: float) -> list[tuple[float, float]]:
    c, s = math.cos(angle), math.sin(angle)
    pts = []
    for dx, dy in ((-w / 2, -h / 2), (w / 2, -h / 2), (w / 2, h / 2), (-w / 2, h / 2)):
        pts.append((round(cx + dx * c - dy * s, 6), round(cy + dx * s + dy * c, 6)))
    return pts


def _jitter(rng: np.random.Generator, q: Quadrilateral, sigma: float) -> Quadrilateral:
    if sigma == 0:
        return q
    base = np.asarray(q.vertices)
    for _ in range(MAX_JITTER_TRIES):
        pts = np.round(base + rng.normal(0.0, sigma, size=base.shape), 6)
        try:
            return normalize(pts.tolist())
        except InvalidGeometryError:
            continue
    return q


def _conf(rng: np.random.Generator, lo: float, hi: float) -> float:
    return round(float(rng.uniform(lo, hi)), 6)


def generate(params: ScenarioParams) -> tuple[VideoGroundTruth, VideoDetections]:
    rng = np.random.default_rng(params.seed)
    radius = params.box_max * math.sqrt(2) / 2
    cell = 2 * radius + 2 * GRID_GAP
    cols = int(params.arena_width // cell)
    rows = int(params.arena_height // cell)
    if params.n_tracks > cols * rows:
        raise GenerationError(
            f"cannot place {params.n_tracks} tracks disjointly; arena fits {cols * rows}"
        )
    cell_w = params.arena_width / cols if cols else 0.0
    cell_h = params.arena_height / rows if rows else 0.0
    slots = rng.permutation(cols * rows)[: params.n_tracks]

    tracks: list[Track] = []
    for tid, slot in enumerate(slots):
        r, c = divmod(int(slot), cols)
        x_lo, x_hi = c * cell_w + radius + GRID_GAP, (c + 1) * cell_w - radius - GRID_GAP
        y_lo, y_hi = r * cell_h + radius + GRID_GAP, (r + 1) * cell_h - radius - GRID_GAP
        w = float(rng.uniform(params.box_min, params.box_max))
        h = float(rng.uniform(params.box_min, params.box_max))
        angle = float(rng.uniform(-params.max_angle, params.max_angle))
        life = int(rng.integers(min(params.min_lifetime, params.frame_count), params.frame_count + 1))
        start = int(rng.integers(0, params.frame_count - life + 1))
        cx, cy = float(rng.uniform(x_lo, x_hi)), float(rng.uniform(y_lo, y_hi))
        step_cap = 0.1 * min(w, h)
        members = {}
        for f in range(start, start + life):
            if f > start:
                dx, dy = np.clip(rng.normal(0.0, params.motion_sigma, 2), -step_cap, step_cap)
                cx = min(max(cx + float(dx), x_lo), x_hi)
                cy = min(max(cy + float(dy), y_lo), y_hi)
            members[f] = Member(normalize(_rect_quad(cx, cy, w, h, angle)), 1.0)
        tracks.append(Track(tid, members))
    gt = VideoGroundTruth(params.video_id, tuple(tracks))

    frames = []
    for f in range(params.frame_count):
        items: list[tuple[Quadrilateral, float]] = []
        for t in tracks:
            q = t.quad_at(f)
            if q is None:
                continue
            if rng.random() < params.dropout:
                continue
            items.append((_jitter(rng, q, params.jitter_sigma),
                          _conf(rng, params.true_conf_min, params.true_conf_max)))
            if rng.random() < params.dup_prob:
                items.append((_jitter(rng, q, params.jitter_sigma),
                              _conf(rng, params.true_conf_min, params.true_conf_max)))
        for _ in range(int(rng.poisson(params.fp_rate)) if params.fp_rate > 0 else 0):
            w = float(rng.uniform(params.box_min, params.box_max))
            h = float(rng.uniform(params.box_min, params.box_max))
            cx = float(rng.uniform(radius, params.arena_width - radius))
            cy = float(rng.uniform(radius, params.arena_height - radius))
            angle = float(rng.uniform(-params.max_angle, params.max_angle))
            items.append((normalize(_rect_quad(cx, cy, w, h, angle)),
                          _conf(rng, params.false_conf_min, params.false_conf_max)))
        if items:
            order = rng.permutation(len(items))
            frames.append((f, tuple(items[i] for i in order)))
    return gt, VideoDetections(params.video_id, params.frame_count, tuple(frames))


def random_convex_quad(
    rng: np.random.Generator, cx: float = 0.0, cy: float = 0.0, size: float = 1.0
) -> Quadrilateral:
    """Rotated rectangle with vertices perturbed, resampled until convex."""
    while True:
        w = size * rng.uniform(0.3, 1.0)
        h = size * rng.uniform(0.3, 1.0)
        angle = rng.uniform(0, math.pi)
        base = np.array(_rect_quad(cx, cy, w, h, angle))
        pts = base + rng.uniform(-0.25, 0.25, size=(4, 2)) * min(w, h)
        try:
            return normalize(pts.tolist())
        except InvalidGeometryError:
            continue


# -- oracles ----------------------------------------------------------------


class MonteCarloIoU(NamedTuple):
    iou: float
    stderr: float


def _inside(poly: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # poly is counter-clockwise; a point is inside when left of (or on) every edge
    mask = np.ones(x.shape, dtype=bool)
    for i in range(len(poly)):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % len(poly)]
        mask &= (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0) >= 0
    return mask


def mc_iou(
    a: Quadrilateral, b: Quadrilateral, samples: int = 1_000_000, seed: int = 0
) -> MonteCarloIoU:
    """Monte-Carlo IoU from uniform samples over the joint bounding rectangle.

    Sampling runs in float32 in coordinates local to that rectangle, which
    is ample for the ~1e-3 statistical resolution at a million samples.
    """
    pa, pb = np.asarray(a.vertices), np.asarray(b.vertices)
    lo = np.minimum(pa.min(axis=0), pb.min(axis=0))
    span = np.maximum(pa.max(axis=0), pb.max(axis=0)) - lo
    pa = (pa - lo).astype(np.float32)
    pb = (pb - lo).astype(np.float32)
    rng = np.random.default_rng(seed)
    x, y = rng.random((2, samples), dtype=np.float32) * span.astype(np.float32)[:, None]
    ina, inb = _inside(pa, x, y), _inside(pb, x, y)
    union = int(np.count_nonzero(ina | inb))
    if union == 0:
        return MonteCarloIoU(0.0, 0.0)
    p = int(np.count_nonzero(ina & inb)) / union
    return MonteCarloIoU(p, math.sqrt(p * (1 - p) / union))


def optimal_match(
    gt: VideoGroundTruth | Sequence[Track],
    pred: VideoGroundTruth | Sequence[Track],
    cfg: MatchConfig | None = None,
) -> int:
    """Largest one-to-one matching over eligible pairs, by exhaustive search."""
    cfg = cfg or MatchConfig()
    g = gt.tracks if isinstance(gt, VideoGroundTruth) else tuple(gt)
    p = pred.tracks if isinstance(pred, VideoGroundTruth) else tuple(pred)
    if len(g) > 8 or len(p) > 8:
        raise ValueError("exhaustive matching supports at most 8 tracks per side")
    nbrs: dict[int, list[int]] = {t.id: [] for t in g}
    for m in eligible_pairs(g, p, cfg):
        nbrs[m.gt_track_id].append(m.pred_track_id)
    return max_matching_size([nbrs[t.id] for t in g])


def max_matching_size(adjacency: Sequence[Sequence[int]]) -> int:
    """Enumerate every assignment of left nodes to distinct right nodes."""

    def best(i: int, used: frozenset) -> int:
        if i == len(adjacency):
            return 0
        top = best(i + 1, used)
        for r in adjacency[i]:
            if r not in used:
                top = max(top, 1 + best(i + 1, used | {r}))
        return top

    return best(0, frozenset())


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def _grow(q: Quadrilateral, factor: float) -> Polygon:
    pts = np.asarray(q.vertices)
    edges = np.linalg.norm(pts - np.roll(pts, -1, axis=0), axis=1)
    poly = Polygon(pts)
    c = np.array(poly.centroid.coords[0])
    rays = pts - c
    dist = np.linalg.norm(rays, axis=1, keepdims=True)
    return Polygon(c + rays * (1 + factor * edges.min() / dist))


def brute_density(quads: Sequence[Quadrilateral], factor: float = 0.1) -> list[int]:
    """Reference density labels via shapely intersection tests and union-find."""
    originals = [Polygon(q.vertices) for q in quads]
    grown = [_grow(q, factor) for q in quads]
    uf = _UnionFind(len(quads))
    for i in range(len(quads)):
        for j in range(len(quads)):
            if i != j and grown[i].intersects(originals[j]):
                uf.union(i, j)
    roots = [uf.find(i) for i in range(len(quads))]
    return [roots.count(r) for r in roots]
