"""Convex quadrilateral primitives.

Every box handled by the package is a :class:`Quadrilateral` in canonical
form: four vertices, counter-clockwise (positive shoelace area with the y
axis pointing up), starting at the lexicographically smallest vertex.
Intersections are computed by clipping one convex polygon against the
half-planes of the other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InvalidGeometryError

Point = tuple[float, float]

MIN_AREA = 1e-9
# cross products above -CONVEX_TOL count as a left turn (collinear corners allowed)
CONVEX_TOL = 1e-9


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True)
class Quadrilateral:
    """Canonical convex quadrilateral. Build it with :func:`normalize`."""

    vertices: tuple[Point, Point, Point, Point]

    def __iter__(self):
        return iter(self.vertices)

    def as_list(self) -> list[list[float]]:
        return [[x, y] for x, y in self.vertices]

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]]) -> "Quadrilateral":
        return normalize(points)

    @classmethod
    def rect(cls, x0: float, y0: float, x1: float, y1: float) -> "Quadrilateral":
        return normalize([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


def _cross(o: Point, a: Point, b: Point) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def signed_area(poly: Sequence[Point]) -> float:
    n = len(poly)
    s = 0.0
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def polygon_area(poly: Sequence[Point]) -> float:
    if len(poly) < 3:
        return 0.0
    return abs(signed_area(poly))


def normalize(raw: Iterable[Sequence[float]]) -> Quadrilateral:
    """Validate four points and return them in canonical order.

    Raises InvalidGeometryError for wrong vertex count, non-finite or
    duplicate vertices, zero area, and non-convex or self-intersecting
    outlines. Non-convex input is rejected, never repaired.
    """
    pts: list[Point] = []
    for p in raw:
        if len(p) != 2:
            raise InvalidGeometryError(f"vertex {p!r} is not an (x, y) pair")
        x, y = float(p[0]), float(p[1])
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InvalidGeometryError(f"non-finite vertex ({x}, {y})")
        pts.append((x, y))
    if len(pts) != 4:
        raise InvalidGeometryError(f"expected 4 vertices, got {len(pts)}")
    if len(set(pts)) != 4:
        raise InvalidGeometryError("duplicate vertices")

    a = signed_area(pts)
    if abs(a) < MIN_AREA:
        raise InvalidGeometryError(f"degenerate quadrilateral (area {abs(a):.3g})")
    if a < 0:
        pts.reverse()
    for i in range(4):
        if _cross(pts[i - 1], pts[i], pts[(i + 1) % 4]) < -CONVEX_TOL:
            raise InvalidGeometryError("quadrilateral is not convex")

    k = min(range(4), key=lambda i: pts[i])
    pts = pts[k:] + pts[:k]
    return Quadrilateral(tuple(pts))  # type: ignore[arg-type]


def area(q: Quadrilateral) -> float:
    """Shoelace area in px^2."""
    a = polygon_area(q.vertices)
    if a < MIN_AREA:
        raise InvalidGeometryError(f"degenerate quadrilateral (area {a:.3g})")
    return a


def intersect_convex(a: Quadrilateral, b: Quadrilateral) -> list[Point]:
    """Clip ``a`` against every edge of ``b``; empty list when disjoint."""
    output: list[Point] = list(a.vertices)
    clip = b.vertices
    for i in range(len(clip)):
        if not output:
            break
        c0, c1 = clip[i], clip[(i + 1) % len(clip)]
        inputs, output = output, []
        prev = inputs[-1]
        prev_side = _cross(c0, c1, prev)
        for cur in inputs:
            cur_side = _cross(c0, c1, cur)
            if cur_side >= 0:
                if prev_side < 0:
                    output.append(_line_hit(prev, cur, prev_side, cur_side))
                output.append(cur)
            elif prev_side >= 0:
                output.append(_line_hit(prev, cur, prev_side, cur_side))
            prev, prev_side = cur, cur_side
    if len(output) < 3:
        return []
    return output


def _line_hit(p: Point, q: Point, sp: float, sq: float) -> Point:
    t = sp / (sp - sq)
    return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))


def iou_spatial(a: Quadrilateral, b: Quadrilateral) -> float:
    if a == b:
        return 1.0
    # fixed argument order makes the result exactly symmetric
    if b.vertices < a.vertices:
        a, b = b, a
    inter = polygon_area(intersect_convex(a, b))
    if inter <= 0.0:
        return 0.0
    union = area(a) + area(b) - inter
    return min(max(inter / union, 0.0), 1.0)


def edge_lengths(q: Quadrilateral) -> list[float]:
    v = q.vertices
    return [math.dist(v[i], v[(i + 1) % 4]) for i in range(4)]


def short_side(q: Quadrilateral) -> float:
    return min(edge_lengths(q))


def centroid(q: Quadrilateral) -> Point2:
    """Area-weighted centroid of the polygon outline."""
    v = q.vertices
    a2 = 0.0
    cx = cy = 0.0
    for i in range(4):
        x0, y0 = v[i]
        x1, y1 = v[(i + 1) % 4]
        w = x0 * y1 - x1 * y0
        a2 += w
        cx += (x0 + x1) * w
        cy += (y0 + y1) * w
    return Point2(cx / (3.0 * a2), cy / (3.0 * a2))


def expand(q: Quadrilateral, factor: float) -> Quadrilateral:
    """Push each vertex away from the centroid by ``factor * short_side(q)``."""
    if factor < 0:
        raise ValueError("expansion factor must be non-negative")
    if factor == 0:
        return q
    d = factor * short_side(q)
    c = centroid(q)
    out = []
    for x, y in q.vertices:
        dx, dy = x - c.x, y - c.y
        r = math.hypot(dx, dy)
        s = (r + d) / r
        out.append((c.x + dx * s, c.y + dy * s))
    return normalize(out)


def bounding_rect(quads: Iterable[Quadrilateral]) -> Quadrilateral:
    """Axis-aligned rectangle enclosing all given quads."""
    xs: list[float] = []
    ys: list[float] = []
    for q in quads:
        for x, y in q.vertices:
            xs.append(x)
            ys.append(y)
    if not xs:
        raise InvalidGeometryError("no quadrilaterals to enclose")
    return Quadrilateral.rect(min(xs), min(ys), max(xs), max(ys))


def convex_intersects(a: Quadrilateral, b: Quadrilateral) -> bool:
    """Closed-set overlap test (touching counts) by separating axes."""
    for poly in (a.vertices, b.vertices):
        for i in range(4):
            x0, y0 = poly[i]
            x1, y1 = poly[(i + 1) % 4]
            nx, ny = y0 - y1, x1 - x0
            pa = [nx * x + ny * y for x, y in a.vertices]
            pb = [nx * x + ny * y for x, y in b.vertices]
            if max(pa) < min(pb) or max(pb) < min(pa):
                return False
    return True


def mean_quad(a: Quadrilateral, b: Quadrilateral) -> Quadrilateral:
    """Vertex-wise mean of two quads after matching their vertex order.

    Canonical ordering can start the two outlines at different corners,
    so ``b`` is cyclically shifted to the correspondence with the smallest
    total squared vertex distance before averaging.
    """
    av, bv = a.vertices, b.vertices
    best = min(
        range(4),
        key=lambda k: (sum(math.dist(av[i], bv[(i + k) % 4]) ** 2 for i in range(4)), k),
    )
    pts = [
        ((av[i][0] + bv[(i + best) % 4][0]) / 2.0, (av[i][1] + bv[(i + best) % 4][1]) / 2.0)
        for i in range(4)
    ]
    return normalize(pts)
